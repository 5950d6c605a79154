"""Scenario files: grammar, parser, runner and CSV export.

A scenario is a sectioned key-value text file describing one
transmission experiment: the two subsystems (the second either given
explicitly or synthesized from the first), the input signal, solver
settings, an optional switching schedule for single-channel operation,
and the artifacts to write::

    # comment
    [system.A]
    order = 2
    a2 = 1
    a1 = 2 + 2*sin(2*pi*t)
    a0 = 5 - 1/2*cos(4*pi*t) + 2*sin(2*pi*t) + 2*pi*cos(2*pi*t)

    [synthesize.B]          # or an explicit [system.B] with b2,b1,b0
    k2 = 1/2
    k1 = -1/4
    k0 = 337/32

    [input]
    term = sine(30, 0.6, 0)
    term = sawtooth(3.3, -30, 30)

    [solver]
    step = 0.001
    horizon = 20

    [switching]             # optional
    slot = 10
    initial_path = AB

    [output]
    trace = ab
    trace = ba
    deviation = on

Coefficient and parameter values use the expression grammar from
:mod:`ltvlink.timefn`.  Parsing is strict by default: unknown sections
or keys are errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .commute import (
    SynthesisParams,
    commutativity_indicator,
    synthesize_pair_order1,
    synthesize_pair_order2,
)
from .ltvsys import make_system
from .signalgen import ConstantLevel, PulseTrain, Sawtooth, SignalSpec, Sine
from .simulate import (
    PATH_AB,
    PATH_BA,
    SolverConfig,
    SwitchingSchedule,
    deviation_outside_transients,
    integrate_cascade,
    integrate_switched,
    relative_sup_deviation,
    settle_after_switches,
)
from .spectrum import Window, periodogram, spectral_distance
from .timefn import (
    Constant,
    Negate,
    ParseError,
    Product,
    RootQuotient,
    Sum,
    normalize,
    parse_expression,
)

__all__ = [
    "Scenario",
    "SystemSpec",
    "SemanticError",
    "ParseError",
    "parse_scenario",
    "run_scenario",
    "RunResult",
    "build_systems",
    "pair_verdict",
    "export_csv",
    "read_trace_csv",
    "export_spectrum_csv",
    "bundled_scenario_names",
    "load_bundled",
    "SPECTRUM_TARGET_RATE_HZ",
]

SPECTRUM_TARGET_RATE_HZ = 100.0

# window dropped after each switching instant when reporting the settled
# switched-vs-unswitched deviation; covers the strongly damped examples'
# transients with margin
SETTLE_EXCLUSION_S = 2.0


class SemanticError(ValueError):
    """A well-formed scenario that violates a scenario invariant."""


@dataclass(frozen=True)
class SystemSpec:
    order: int
    coefficients: tuple


@dataclass(frozen=True)
class Scenario:
    label: str
    system_a: SystemSpec
    system_b: SystemSpec | None
    synthesis: SynthesisParams | None
    input: SignalSpec
    solver: SolverConfig
    switching: SwitchingSchedule | None
    outputs: tuple


# --------------------------------------------------------------------------
# low-level file format

_SECTION_RE = re.compile(r"^\[([A-Za-z0-9_.]+)\]$")
_ENTRY_RE = re.compile(r"^([A-Za-z0-9_]+)\s*=\s*(.*)$")

_KNOWN_SECTIONS = {
    "system.A": ("order", "a2", "a1", "a0"),
    "system.B": ("order", "b2", "b1", "b0"),
    "synthesize.B": ("k2", "k1", "k0", "c1", "c0"),
    "input": ("term",),
    "solver": ("step", "horizon", "record_decimation"),
    "switching": ("slot", "initial_path", "boundaries", "paths"),
    "output": ("trace", "spectrum", "deviation", "verdict", "settle"),
}
_REPEATABLE = {("input", "term"), ("output", "trace"), ("output", "spectrum")}


def _split_sections(text, strict):
    """Tokenize into {section: [(key, value, line)]}, preserving order."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name not in _KNOWN_SECTIONS:
                if strict:
                    raise ParseError(
                        f"unknown section [{name}]", lineno, 1,
                        expected=sorted(_KNOWN_SECTIONS),
                    )
                current = None
                continue
            if name in sections:
                raise SemanticError(f"duplicate section [{name}] (line {lineno})")
            sections[name] = []
            current = name
            continue
        m = _ENTRY_RE.match(line)
        if m is None:
            raise ParseError(
                "expected 'key = value' or a [section] header",
                lineno, 1, expected=("key = value", "[section]"),
            )
        if current is None:
            if strict:
                raise ParseError(
                    "entry outside any known section", lineno, 1, expected=("[section]",)
                )
            continue
        key, value = m.group(1), m.group(2).strip()
        if key not in _KNOWN_SECTIONS[current]:
            if strict:
                raise ParseError(
                    f"unknown key {key!r} in [{current}]", lineno, 1,
                    expected=_KNOWN_SECTIONS[current],
                )
            continue
        if (current, key) not in _REPEATABLE and any(k == key for k, _, _ in sections[current]):
            raise SemanticError(f"duplicate key {key!r} in [{current}] (line {lineno})")
        sections[current].append((key, value, lineno))
    return sections


def _entries(sections, name):
    return {k: (v, ln) for k, v, ln in sections.get(name, [])}


def _expr(value, lineno):
    return parse_expression(value, start_line=lineno)


def _number(value, lineno, what):
    node = normalize(_expr(value, lineno))
    if not isinstance(node, Constant):
        raise SemanticError(f"{what} must be a number (line {lineno})")
    return node.value


def _require(entries, key, section):
    if key not in entries:
        raise SemanticError(f"missing required key {key!r} in [{section}]")
    return entries[key]


# --------------------------------------------------------------------------
# section builders

def _build_system(sections, section, prefix):
    entries = _entries(sections, section)
    value, ln = _require(entries, "order", section)
    order = _number(value, ln, "order")
    if order not in (1, 2):
        raise SemanticError(f"unsupported order {value!r} in [{section}] (line {ln})")
    order = int(order)
    names = [f"{prefix}{i}" for i in range(order, -1, -1)]
    coeffs = []
    for name in names:
        v, ln = _require(entries, name, section)
        coeffs.append(_expr(v, ln))
    extra = set(entries) - set(names) - {"order"}
    if extra:
        raise SemanticError(
            f"key {sorted(extra)[0]!r} does not belong to an order-{order} [{section}]"
        )
    return SystemSpec(order, tuple(coeffs))


def _build_synthesis(sections, order_a):
    entries = _entries(sections, "synthesize.B")
    has_gains = any(k in entries for k in ("k2", "k1", "k0"))
    has_params = any(k in entries for k in ("c1", "c0"))
    if has_gains and has_params:
        raise SemanticError("[synthesize.B] mixes order-2 gains and order-1 parameters")
    if has_gains:
        if order_a != 2:
            raise SemanticError("gains k2,k1,k0 require an order-2 [system.A]")
        values = []
        for key in ("k2", "k1", "k0"):
            v, ln = _require(entries, key, "synthesize.B")
            values.append(_number(v, ln, key))
        return SynthesisParams.gains(*values)
    if order_a != 1:
        raise SemanticError("parameters c1,c0 require an order-1 [system.A]")
    c1_v, c1_ln = _require(entries, "c1", "synthesize.B")
    c0_v, c0_ln = _require(entries, "c0", "synthesize.B")
    return SynthesisParams.first_order(_expr(c1_v, c1_ln), _expr(c0_v, c0_ln))


_TERM_RE = re.compile(r"^(sine|sawtooth|pulse|constant)\s*\((.*)\)$")


def _build_input(sections):
    rows = sections.get("input", [])
    terms = []
    for key, value, ln in rows:
        m = _TERM_RE.match(value)
        if m is None:
            raise ParseError(
                f"bad input term {value!r}", ln, 1,
                expected=("sine(amp, hz, phase)", "sawtooth(period, min, max)",
                          "pulse(amp, period, duty)", "constant(level)"),
            )
        kind = m.group(1)
        args = [a.strip() for a in m.group(2).split(",")] if m.group(2).strip() else []
        arity = {"sine": 3, "sawtooth": 3, "pulse": 3, "constant": 1}[kind]
        if len(args) != arity:
            raise SemanticError(
                f"{kind} takes {arity} arguments, got {len(args)} (line {ln})"
            )
        nums = [_number(a, ln, f"{kind} argument") for a in args]
        try:
            if kind == "sine":
                terms.append(Sine(nums[0], nums[1], nums[2]))
            elif kind == "sawtooth":
                terms.append(Sawtooth(nums[0], nums[1], nums[2]))
            elif kind == "pulse":
                terms.append(PulseTrain(nums[0], nums[1], nums[2]))
            else:
                terms.append(ConstantLevel(nums[0]))
        except ValueError as exc:
            raise SemanticError(f"{exc} (line {ln})") from exc
    if not terms:
        raise SemanticError("missing required key 'term' in [input]")
    return SignalSpec(tuple(terms))


def _build_solver(sections):
    entries = _entries(sections, "solver")
    h_v, h_ln = _require(entries, "horizon", "solver")
    horizon = _number(h_v, h_ln, "horizon")
    step = 1e-3
    if "step" in entries:
        step = _number(*entries["step"], "step")
    decimation = 1
    if "record_decimation" in entries:
        d = _number(*entries["record_decimation"], "record_decimation")
        if d != int(d):
            raise SemanticError("record_decimation must be an integer")
        decimation = int(d)
    try:
        return SolverConfig(horizon=horizon, step=step, record_decimation=decimation)
    except ValueError as exc:
        raise SemanticError(str(exc)) from exc


def _paths_list(value, ln):
    paths = []
    for item in value.split(","):
        item = item.strip()
        if item not in (PATH_AB, PATH_BA):
            raise SemanticError(f"path must be AB or BA, got {item!r} (line {ln})")
        paths.append(item)
    return tuple(paths)


def _build_switching(sections, solver):
    if "switching" not in sections:
        return None
    entries = _entries(sections, "switching")
    initial = PATH_AB
    if "initial_path" in entries:
        v, ln = entries["initial_path"]
        if v not in (PATH_AB, PATH_BA):
            raise SemanticError(f"initial_path must be AB or BA, got {v!r} (line {ln})")
        initial = v
    if "slot" in entries and "boundaries" in entries:
        raise SemanticError("[switching] takes either 'slot' or 'boundaries', not both")
    try:
        if "slot" in entries:
            if "paths" in entries:
                raise SemanticError("'paths' requires explicit 'boundaries'")
            slot = _number(*entries["slot"], "slot")
            return SwitchingSchedule.periodic(slot, solver.horizon, initial)
        if "boundaries" in entries:
            v, ln = entries["boundaries"]
            boundaries = tuple(_number(b.strip(), ln, "boundary") for b in v.split(","))
            explicit = None
            if "paths" in entries:
                explicit = _paths_list(*entries["paths"])
                initial = explicit[0]
            return SwitchingSchedule(boundaries, initial, explicit)
    except ValueError as exc:
        raise SemanticError(str(exc)) from exc
    raise SemanticError("missing required key 'slot' or 'boundaries' in [switching]")


_OUTPUT_ARGS = {
    "trace": ("ab", "ba", "switched"),
    "spectrum": ("transmitted", "output"),
    "deviation": ("on", "off"),
    "verdict": ("on", "off"),
    "settle": ("on", "off"),
}


def _build_outputs(sections):
    rows = sections.get("output", [])
    requests = []
    for key, value, ln in rows:
        value = value.strip()
        if value not in _OUTPUT_ARGS[key]:
            raise SemanticError(
                f"output {key!r} takes one of {_OUTPUT_ARGS[key]}, got {value!r} (line {ln})"
            )
        if value == "off":
            continue
        req = (key, None if value == "on" else value)
        if req in requests:
            raise SemanticError(f"duplicate output request {key} = {value} (line {ln})")
        requests.append(req)
    return tuple(requests)


def parse_scenario(text, label="scenario", strict=True):
    """Parse scenario text.  Raises ParseError or SemanticError."""
    sections = _split_sections(text, strict)
    for required in ("system.A", "input", "solver"):
        if required not in sections:
            raise SemanticError(f"missing required section [{required}]")
    has_b = "system.B" in sections
    has_syn = "synthesize.B" in sections
    if has_b == has_syn:
        raise SemanticError(
            "exactly one of [system.B] or [synthesize.B] must be present"
        )
    system_a = _build_system(sections, "system.A", "a")
    solver = _build_solver(sections)
    system_b = _build_system(sections, "system.B", "b") if has_b else None
    synthesis = _build_synthesis(sections, system_a.order) if has_syn else None
    input_spec = _build_input(sections)
    switching = _build_switching(sections, solver)
    if switching is not None:
        for b in switching.slot_boundaries:
            if b > solver.horizon:
                raise SemanticError(
                    f"switching instant {b:g} is beyond the horizon {solver.horizon:g}"
                )
    outputs = _build_outputs(sections)
    for key, arg in outputs:
        if (key == "settle" or (key, arg) == ("trace", "switched")) and switching is None:
            raise SemanticError(f"output {key!r} needs a [switching] section")
    return Scenario(
        label=label,
        system_a=system_a,
        system_b=system_b,
        synthesis=synthesis,
        input=input_spec,
        solver=solver,
        switching=switching,
        outputs=outputs,
    )


# --------------------------------------------------------------------------
# realization and verdicts

def build_systems(scenario, solver=None):
    """Realize (A, B, verdict).  verdict is None for explicit B."""
    cfg = solver or scenario.solver
    a = scenario.system_a
    A = make_system(a.order, a.coefficients, cfg.horizon, label="A")
    if scenario.system_b is not None:
        b = scenario.system_b
        B = make_system(b.order, b.coefficients, cfg.horizon, label="B")
        return A, B, None
    if scenario.synthesis.order == 2:
        B, verdict = synthesize_pair_order2(A, scenario.synthesis)
    else:
        B, verdict = synthesize_pair_order1(A, scenario.synthesis)
    return A, B, verdict


def pair_verdict(A, B, synthesized_verdict=None):
    """Commutativity verdict for a realized pair.

    Synthesized pairs carry their verdict already.  For explicit pairs
    the order-2 indicator depends only on A; an explicit order-1
    partner is checked by recovering the transformation parameters
    c1 = b1/a1 and c0 = b0 - a0 c1 and testing their constancy.
    """
    if synthesized_verdict is not None:
        return synthesized_verdict
    if A.order == 2:
        return commutativity_indicator(A)
    if B is None or B.order != 1:
        raise SemanticError("an order-1 verdict needs an order-1 partner system")
    a1, a0 = A.coefficients
    b1, b0 = B.coefficients
    # b1/a1 realized as b1 / sqrt(a1^2); a1 > 0 by the leading check
    c1 = normalize(RootQuotient(b1, Product(a1, a1), 1))
    c0 = normalize(Sum(b0, Negate(Product(a0, c1))))
    _, verdict = synthesize_pair_order1(A, SynthesisParams.first_order(c1, c0))
    return verdict


# --------------------------------------------------------------------------
# CSV export / import

def _fmt(value):
    return f"{float(value) + 0.0:.9g}"


def export_csv(trace):
    """Trace as CSV text: t,input,transmitted,output,active_path."""
    lines = ["t,input,transmitted,output,active_path"]
    for i in range(len(trace)):
        lines.append(
            f"{_fmt(trace.times[i])},{_fmt(trace.input[i])},"
            f"{_fmt(trace.transmitted[i])},{_fmt(trace.output[i])},"
            f"{trace.active_path[i]}"
        )
    return "\n".join(lines) + "\n"


def read_trace_csv(text):
    """Parse export_csv output back into arrays.

    Returns a dict with times/input/transmitted/output arrays and the
    active_path tuple.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "t,input,transmitted,output,active_path":
        raise ParseError("missing trace CSV header", 1, 1,
                         expected=("t,input,transmitted,output,active_path",))
    cols = ([], [], [], [])
    paths = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", lineno, 1)
        for store, part in zip(cols, parts[:4]):
            try:
                store.append(float(part))
            except ValueError:
                raise ParseError(f"bad number {part!r}", lineno, 1) from None
        if parts[4] not in (PATH_AB, PATH_BA):
            raise ParseError(f"bad path {parts[4]!r}", lineno, 1,
                             expected=(PATH_AB, PATH_BA))
        paths.append(parts[4])
    return {
        "times": np.array(cols[0]),
        "input": np.array(cols[1]),
        "transmitted": np.array(cols[2]),
        "output": np.array(cols[3]),
        "active_path": tuple(paths),
    }


def export_spectrum_csv(power_spectrum):
    """Spectrum as CSV text: frequency_hz,power."""
    lines = ["frequency_hz,power"]
    for f, p in zip(power_spectrum.frequencies_hz, power_spectrum.power):
        lines.append(f"{_fmt(f)},{_fmt(p)}")
    return "\n".join(lines) + "\n"


def decimate_for_spectrum(trace, target_rate_hz=SPECTRUM_TARGET_RATE_HZ):
    """Integer-stride decimation of a trace to about target_rate_hz.

    The simulated signals live far below the target Nyquist band, so
    plain subsampling is alias-free here.
    """
    stride = max(1, int(round(1.0 / (trace.step * target_rate_hz))))
    rate = 1.0 / (trace.step * stride)
    return stride, rate


# --------------------------------------------------------------------------
# runner

@dataclass(frozen=True)
class RunResult:
    files: tuple
    report: str
    summary: tuple


def _report_line(key, value):
    if isinstance(value, bool):
        return f"{key} = {'true' if value else 'false'}"
    if isinstance(value, float):
        return f"{key} = {_fmt(value)}"
    return f"{key} = {value}"


def run_scenario(scenario, out_dir, step=None, horizon=None):
    """Execute a scenario and write its requested artifacts.

    ``step``/``horizon`` override the scenario's solver settings.
    Returns a :class:`RunResult`; file contents are deterministic for
    fixed inputs.
    """
    cfg = scenario.solver
    if step is not None or horizon is not None:
        cfg = replace(
            cfg,
            step=step if step is not None else cfg.step,
            horizon=horizon if horizon is not None else cfg.horizon,
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    A, B, syn_verdict = build_systems(scenario, cfg)

    wants = {key for key, _ in scenario.outputs}
    trace_args = {arg for key, arg in scenario.outputs if key == "trace"}
    spectrum_kinds = [arg for key, arg in scenario.outputs if key == "spectrum"]
    need_both = bool({"deviation", "spectrum"} & wants)
    initial_ba = scenario.switching is not None and scenario.switching.initial_path == PATH_BA
    need_ab = need_both or "ab" in trace_args or ("settle" in wants and not initial_ba)
    need_ba = need_both or "ba" in trace_args or ("settle" in wants and initial_ba)
    need_switched = "switched" in trace_args or "settle" in wants

    traces = {}
    if need_ab:
        traces["ab"] = integrate_cascade(A, B, scenario.input, cfg)
    if need_ba:
        traces["ba"] = integrate_cascade(B, A, scenario.input, cfg)
    if need_switched:
        traces["switched"] = integrate_switched(A, B, scenario.switching, scenario.input, cfg)

    files = []
    report = [f"scenario = {scenario.label}", f"step = {_fmt(cfg.step)}",
              f"horizon = {_fmt(cfg.horizon)}"]

    if "verdict" in wants:
        verdict = pair_verdict(A, B, syn_verdict)
        report.append(_report_line("indicator_is_constant", verdict.is_constant))
        report.append(_report_line("indicator_value", verdict.constant_value))
        report.append(
            _report_line("indicator_max_deviation", verdict.max_deviation_from_mean)
        )
        if verdict.nonzero_ic_ok is not None:
            report.append(_report_line("nonzero_ic_ok", verdict.nonzero_ic_ok))

    if "deviation" in wants:
        dev = relative_sup_deviation(traces["ab"].output, traces["ba"].output)
        report.append(_report_line("deviation_ab_ba", dev))

    for arg in ("ab", "ba", "switched"):
        if arg in trace_args:
            path = out_dir / f"{scenario.label}_trace_{arg}.csv"
            path.write_text(export_csv(traces[arg]), newline="\n")
            files.append(path)

    if spectrum_kinds:
        stride, rate = decimate_for_spectrum(traces["ab"])
        for kind in spectrum_kinds:
            spectra = {}
            for arg in ("ab", "ba"):
                series = getattr(traces[arg], kind)[::stride]
                spectra[arg] = periodogram(series, rate, Window.HANN)
                path = out_dir / f"{scenario.label}_spectrum_{kind}_{arg}.csv"
                path.write_text(export_spectrum_csv(spectra[arg]), newline="\n")
                files.append(path)
            dist = spectral_distance(spectra["ab"], spectra["ba"])
            report.append(_report_line(f"spectral_distance_{kind}", dist))

    if "settle" in wants:
        reference = traces["ba" if initial_ba else "ab"]
        settles = settle_after_switches(traces["switched"], reference, scenario.switching)
        for boundary, value in zip(scenario.switching.slot_boundaries, settles):
            report.append(_report_line(f"settle_after_{_fmt(boundary)}s", value))
        dev_sw = relative_sup_deviation(reference.output, traces["switched"].output)
        report.append(_report_line("deviation_switched_vs_unswitched", dev_sw))
        dev_settled = deviation_outside_transients(
            traces["switched"], reference, scenario.switching, SETTLE_EXCLUSION_S
        )
        report.append(_report_line("deviation_switched_settled", dev_settled))

    report_text = "\n".join(report) + "\n"
    if wants - {"trace"}:
        path = out_dir / f"{scenario.label}_report.txt"
        path.write_text(report_text, newline="\n")
        files.append(path)

    summary = tuple(f"wrote {p}" for p in files) + tuple(report)
    return RunResult(tuple(files), report_text, summary)


# --------------------------------------------------------------------------
# bundled corpus

def bundled_scenario_names():
    """Names of the scenarios shipped with the package."""
    root = resources.files("ltvlink") / "scenarios"
    return tuple(sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".scn")))


def load_bundled(name, strict=True):
    """Parse a bundled scenario by name (without the .scn suffix)."""
    root = resources.files("ltvlink") / "scenarios"
    path = root / f"{name}.scn"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise KeyError(
            f"no bundled scenario {name!r}; available: {', '.join(bundled_scenario_names())}"
        ) from None
    return parse_scenario(text, label=name, strict=strict)
