"""Deterministic fixed-step simulation of cascade channels.

Two interconnected subsystems are integrated jointly with classical
4th-order Runge-Kutta: the full stacked state advances in lockstep and,
inside every RK stage, the second-in-chain subsystem sees the
instantaneous output of the first, evaluated from the stage state.  No
inter-system interpolation is involved, which keeps the switched
topology exact: at a switching instant only the interconnection order
swaps while both subsystems' internal states persist.

Coefficients and the input signal are pre-sampled on the half-step grid
(the only times classical RK4 touches), so runs are reproducible
bit-for-bit and fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ltvsys import LEADING_EPS, DegenerateLeadingCoefficient, SystemState
from .signalgen import sample as sample_signal
from .timefn import evaluate

__all__ = [
    "SolverConfig",
    "SwitchingSchedule",
    "SimulationTrace",
    "PATH_AB",
    "PATH_BA",
    "integrate_cascade",
    "integrate_switched",
    "relative_sup_deviation",
    "settle_after_switches",
    "deviation_outside_transients",
]

PATH_AB = "AB"
PATH_BA = "BA"

_MAX_STEPS = 10**8


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step solver settings."""

    horizon: float
    step: float = 1e-3
    record_decimation: int = 1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.horizon >= self.step:
            raise ValueError("horizon must be at least one step")
        if self.horizon / self.step > _MAX_STEPS:
            raise ValueError(f"horizon/step exceeds the {_MAX_STEPS:g}-step guard")
        if int(self.record_decimation) != self.record_decimation or self.record_decimation < 1:
            raise ValueError("record_decimation must be a positive integer")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step))


@dataclass(frozen=True)
class SwitchingSchedule:
    """Slot boundaries and per-slot chain order for a shared channel.

    ``slot_boundaries`` are the switching instants (strictly increasing,
    inside (0, horizon]).  Slot k covers [boundary_{k-1}, boundary_k)
    with the convention that a new path applies from its boundary on
    (left-closed slots).  Paths alternate starting from ``initial_path``
    unless ``explicit_paths`` gives one path per slot
    (len(slot_boundaries) + 1 entries).
    """

    slot_boundaries: tuple[float, ...]
    initial_path: str = PATH_AB
    explicit_paths: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "slot_boundaries", tuple(float(b) for b in self.slot_boundaries))
        if self.initial_path not in (PATH_AB, PATH_BA):
            raise ValueError(f"initial_path must be {PATH_AB!r} or {PATH_BA!r}")
        last = 0.0
        for b in self.slot_boundaries:
            if not b > last:
                raise ValueError("slot boundaries must be strictly increasing and > 0")
            last = b
        if self.explicit_paths is not None:
            paths = tuple(self.explicit_paths)
            if len(paths) != len(self.slot_boundaries) + 1:
                raise ValueError(
                    f"need {len(self.slot_boundaries) + 1} per-slot paths, got {len(paths)}"
                )
            for p in paths:
                if p not in (PATH_AB, PATH_BA):
                    raise ValueError(f"path must be {PATH_AB!r} or {PATH_BA!r}")
            if paths[0] != self.initial_path:
                raise ValueError("explicit_paths[0] must match initial_path")
            object.__setattr__(self, "explicit_paths", paths)

    @classmethod
    def periodic(cls, slot, horizon, initial_path=PATH_AB):
        """Alternating slots of fixed duration filling [0, horizon)."""
        if not slot > 0:
            raise ValueError("slot duration must be positive")
        n = int(np.ceil(horizon / slot)) - 1
        boundaries = tuple((k + 1) * slot for k in range(n) if (k + 1) * slot < horizon)
        return cls(boundaries, initial_path)

    def slot_paths(self):
        if self.explicit_paths is not None:
            return self.explicit_paths
        n_slots = len(self.slot_boundaries) + 1
        order = (PATH_AB, PATH_BA) if self.initial_path == PATH_AB else (PATH_BA, PATH_AB)
        return tuple(order[k % 2] for k in range(n_slots))


@dataclass(frozen=True)
class SimulationTrace:
    """Uniformly sampled record of one simulation.

    ``state_first``/``state_second`` always refer to the two systems in
    the order they were passed to the integrator (for switched runs the
    pair (A, B)), not to the chain position; this is what makes the
    recorded states continuous across switching instants.
    ``transmitted`` is the output of the current first-in-chain
    subsystem (the signal on the medium) and ``active_path`` says which
    system that is: "AB" means first-argument system first.
    """

    times: np.ndarray
    input: np.ndarray
    transmitted: np.ndarray
    output: np.ndarray
    state_first: np.ndarray
    state_second: np.ndarray
    active_path: tuple[str, ...]
    step: float = field(default=1e-3)

    def __len__(self):
        return len(self.times)


def _half_grid_times(n_steps, h):
    return np.arange(2 * n_steps + 1) * (0.5 * h)

def _coefficient_table(sys, half_times):
    tables = [np.asarray(evaluate(c, half_times), dtype=float) for c in sys.coefficients]
    low = float(np.min(tables[0]))
    if low < LEADING_EPS:
        where = float(half_times[int(np.argmin(tables[0]))])
        name = f" of system {sys.label!r}" if sys.label else ""
        raise DegenerateLeadingCoefficient(
            f"leading coefficient{name} reaches {low:g} at t = {where:g} "
            "on the integration grid"
        )
    return tables


def _initial_values(sys, state):
    if state is None:
        return (0.0,) * sys.order
    values = state.values if isinstance(state, SystemState) else tuple(state)
    if len(values) != sys.order:
        raise ValueError(f"initial state length {len(values)} != order {sys.order}")
    if isinstance(state, SystemState) and state.time != 0.0:
        raise ValueError("initial states must be given at t = 0")
    return tuple(float(v) for v in values)


def integrate_cascade(first, second, input_signal, cfg, initial=None):
    """Simulate the chain input -> first -> second -> output.

    ``initial`` is an optional pair of states (defaults to the relaxed
    case, all zeros).  Returns a :class:`SimulationTrace` whose
    ``transmitted`` series is the first subsystem's output.
    """
    s1 = _initial_values(first, initial[0] if initial else None)
    s2 = _initial_values(second, initial[1] if initial else None)
    n = cfg.n_steps
    path_idx = np.zeros(n + 1, dtype=np.uint8)
    return _integrate(first, second, input_signal, cfg, s1, s2, path_idx)


def integrate_switched(system_a, system_b, schedule, input_signal, cfg):
    """Simulate the time-shared single channel with switching.

    Both subsystems start relaxed at t = 0 and their internal states
    persist continuously across switching instants; only the chain order
    changes.  Switching instants snap to the nearest integration step
    boundary (error at most step/2 in slot timing), and a new path
    applies from its boundary on.
    """
    n = cfg.n_steps
    h = cfg.step
    for b in schedule.slot_boundaries:
        if b > cfg.horizon:
            raise ValueError(f"switching instant {b:g} lies beyond the horizon")
    boundary_idx = [int(np.floor(b / h + 0.5)) for b in schedule.slot_boundaries]
    if any(i <= 0 or i > n for i in boundary_idx):
        raise ValueError("a switching instant snapped outside (0, horizon]")
    if len(set(boundary_idx)) != len(boundary_idx):
        raise ValueError("switching instants snap to the same step; slots collapse")
    paths = schedule.slot_paths()
    path_idx = np.empty(n + 1, dtype=np.uint8)
    edges = [0] + boundary_idx + [n + 1]
    for k in range(len(edges) - 1):
        path_idx[edges[k]:edges[k + 1]] = 0 if paths[k] == PATH_AB else 1
    return _integrate(system_a, system_b, input_signal, cfg, (0.0,) * system_a.order,
                      (0.0,) * system_b.order, path_idx)


def _integrate(first, second, input_signal, cfg, s1, s2, path_idx):
    n = cfg.n_steps
    h = cfg.step
    dec = cfg.record_decimation
    half_times = _half_grid_times(n, h)
    c1 = _coefficient_table(first, half_times)
    c2 = _coefficient_table(second, half_times)
    x = np.asarray(sample_signal(input_signal, half_times), dtype=float)

    if first.order == 2 and second.order == 2:
        runner = _run_22
    elif first.order == 1 and second.order == 1:
        runner = _run_11
    else:
        runner = _run_generic
    rec_first, rec_second = runner(c1, c2, x, path_idx, h, n, dec, s1, s2)

    rec_idx = np.arange(0, n + 1, dec)
    times = rec_idx * h
    inputs = x[2 * rec_idx]
    p = path_idx[rec_idx]
    y_first = rec_first[:, 0]
    y_second = rec_second[:, 0]
    transmitted = np.where(p == 0, y_first, y_second)
    output = np.where(p == 0, y_second, y_first)
    active = tuple(PATH_AB if v == 0 else PATH_BA for v in p)
    return SimulationTrace(
        times=times,
        input=inputs,
        transmitted=transmitted,
        output=output,
        state_first=rec_first,
        state_second=rec_second,
        active_path=active,
        step=h * dec,
    )


def _run_22(c1, c2, x, path_idx, h, n, dec, s1, s2):
    a2, a1, a0 = (c.tolist() for c in c1)
    b2, b1, b0 = (c.tolist() for c in c2)
    xs = x.tolist()
    pth = path_idx.tolist()
    y1, v1 = s1
    y2, v2 = s2
    n_rec = n // dec + 1
    rec_first = np.empty((n_rec, 2))
    rec_second = np.empty((n_rec, 2))
    rec_first[0] = (y1, v1)
    rec_second[0] = (y2, v2)
    h2 = 0.5 * h
    h6 = h / 6.0
    r = 1
    for m in range(n):
        j0 = 2 * m
        j1 = j0 + 1
        j2 = j0 + 2

        def stage(j, py1, pv1, py2, pv2, ab=pth[m] == 0):
            if ab:
                dv1 = (xs[j] - a1[j] * pv1 - a0[j] * py1) / a2[j]
                dv2 = (py1 - b1[j] * pv2 - b0[j] * py2) / b2[j]
            else:
                dv2 = (xs[j] - b1[j] * pv2 - b0[j] * py2) / b2[j]
                dv1 = (py2 - a1[j] * pv1 - a0[j] * py1) / a2[j]
            return pv1, dv1, pv2, dv2

        A = stage(j0, y1, v1, y2, v2)
        B = stage(j1, y1 + h2 * A[0], v1 + h2 * A[1], y2 + h2 * A[2], v2 + h2 * A[3])
        C = stage(j1, y1 + h2 * B[0], v1 + h2 * B[1], y2 + h2 * B[2], v2 + h2 * B[3])
        D = stage(j2, y1 + h * C[0], v1 + h * C[1], y2 + h * C[2], v2 + h * C[3])
        y1 += h6 * (A[0] + 2.0 * (B[0] + C[0]) + D[0])
        v1 += h6 * (A[1] + 2.0 * (B[1] + C[1]) + D[1])
        y2 += h6 * (A[2] + 2.0 * (B[2] + C[2]) + D[2])
        v2 += h6 * (A[3] + 2.0 * (B[3] + C[3]) + D[3])
        if (m + 1) % dec == 0 and r < n_rec:
            rec_first[r] = (y1, v1)
            rec_second[r] = (y2, v2)
            r += 1
    return rec_first, rec_second


def _run_11(c1, c2, x, path_idx, h, n, dec, s1, s2):
    a1, a0 = (c.tolist() for c in c1)
    b1, b0 = (c.tolist() for c in c2)
    xs = x.tolist()
    pth = path_idx.tolist()
    (y1,) = s1
    (y2,) = s2
    n_rec = n // dec + 1
    rec_first = np.empty((n_rec, 1))
    rec_second = np.empty((n_rec, 1))
    rec_first[0, 0] = y1
    rec_second[0, 0] = y2
    h2 = 0.5 * h
    h6 = h / 6.0
    r = 1
    for m in range(n):
        j0 = 2 * m
        j1 = j0 + 1
        j2 = j0 + 2

        def stage(j, py1, py2, ab=pth[m] == 0):
            if ab:
                d1 = (xs[j] - a0[j] * py1) / a1[j]
                d2 = (py1 - b0[j] * py2) / b1[j]
            else:
                d2 = (xs[j] - b0[j] * py2) / b1[j]
                d1 = (py2 - a0[j] * py1) / a1[j]
            return d1, d2

        k1a, k1b = stage(j0, y1, y2)
        k2a, k2b = stage(j1, y1 + h2 * k1a, y2 + h2 * k1b)
        k3a, k3b = stage(j1, y1 + h2 * k2a, y2 + h2 * k2b)
        k4a, k4b = stage(j2, y1 + h * k3a, y2 + h * k3b)
        y1 += h6 * (k1a + 2.0 * (k2a + k3a) + k4a)
        y2 += h6 * (k1b + 2.0 * (k2b + k3b) + k4b)
        if (m + 1) % dec == 0 and r < n_rec:
            rec_first[r, 0] = y1
            rec_second[r, 0] = y2
            r += 1
    return rec_first, rec_second


def _run_generic(c1, c2, x, path_idx, h, n, dec, s1, s2):
    """Mixed-order fallback; same stage structure as the fast paths."""
    o1 = len(c1) - 1
    o2 = len(c2) - 1

    def rhs(coeffs, order, j, state, u):
        if order == 1:
            (a1, a0) = coeffs
            return ((u - a0[j] * state[0]) / a1[j],)
        a2, a1, a0 = coeffs
        return (state[1], (u - a1[j] * state[1] - a0[j] * state[0]) / a2[j])

    def deriv(j, state, ab):
        sf = state[:o1]
        ss = state[o1:]
        if ab:
            d1 = rhs(c1, o1, j, sf, x[j])
            d2 = rhs(c2, o2, j, ss, sf[0])
        else:
            d2 = rhs(c2, o2, j, ss, x[j])
            d1 = rhs(c1, o1, j, sf, ss[0])
        return d1 + d2

    state = tuple(s1) + tuple(s2)
    dim = o1 + o2
    n_rec = n // dec + 1
    rec_first = np.empty((n_rec, o1))
    rec_second = np.empty((n_rec, o2))
    rec_first[0] = state[:o1]
    rec_second[0] = state[o1:]
    h2 = 0.5 * h
    h6 = h / 6.0
    r = 1
    for m in range(n):
        k = 2 * m
        ab = path_idx[m] == 0
        k1 = deriv(k, state, ab)
        k2 = deriv(k + 1, tuple(state[i] + h2 * k1[i] for i in range(dim)), ab)
        k3 = deriv(k + 1, tuple(state[i] + h2 * k2[i] for i in range(dim)), ab)
        k4 = deriv(k + 2, tuple(state[i] + h * k3[i] for i in range(dim)), ab)
        state = tuple(
            state[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) for i in range(dim)
        )
        if (m + 1) % dec == 0 and r < n_rec:
            rec_first[r] = state[:o1]
            rec_second[r] = state[o1:]
            r += 1
    return rec_first, rec_second


def relative_sup_deviation(reference, other, floor=1e-12):
    """sup|reference - other| / max(sup|reference|, floor)."""
    reference = np.asarray(reference, dtype=float)
    other = np.asarray(other, dtype=float)
    num = float(np.max(np.abs(reference - other)))
    den = max(float(np.max(np.abs(reference))), floor)
    return num / den


def settle_after_switches(trace_switched, trace_reference, schedule, band_fraction=0.05):
    """Settle time after each switching instant, in seconds.

    The settle time for a switching instant is how long the switched
    output takes to re-enter (and stay within, for the rest of the
    slot) a band of ``band_fraction`` times the reference output's peak
    magnitude around the unswitched reference output.  A slot whose
    deviation never re-enters the band reports the full slot duration.
    """
    times = trace_switched.times
    if len(times) != len(trace_reference.times):
        raise ValueError("switched and reference traces must share sampling")
    diff = np.abs(np.asarray(trace_switched.output) - np.asarray(trace_reference.output))
    threshold = band_fraction * float(np.max(np.abs(trace_reference.output)))
    end_time = float(times[-1])
    edges = list(schedule.slot_boundaries) + [end_time]
    settle = []
    for i, t_s in enumerate(schedule.slot_boundaries):
        t_end = edges[i + 1]
        # interior slots are left-closed: the sample at the next boundary
        # already belongs to the next slot's transient
        if t_end < end_time:
            mask = (times >= t_s) & (times < t_end)
        else:
            mask = (times >= t_s) & (times <= t_end)
        idx = np.nonzero(mask)[0]
        over = idx[diff[idx] > threshold]
        if len(over) == 0:
            settle.append(0.0)
        else:
            last = int(over[-1])
            if last + 1 < len(times) and times[last + 1] <= t_end:
                settle.append(float(times[last + 1] - t_s))
            else:
                settle.append(float(t_end - t_s))
    return settle


def deviation_outside_transients(trace_switched, trace_reference, schedule, exclusion_s):
    """Relative sup deviation ignoring a window after each switch.

    At a switching instant the output terminal moves to the other
    subsystem, so the switched output inevitably jumps before its
    transient dies out; this measures the agreement on the settled
    remainder: samples earlier than ``exclusion_s`` seconds after the
    most recent switching instant are excluded.  Normalized by the
    reference output's sup norm.
    """
    times = trace_switched.times
    if len(times) != len(trace_reference.times):
        raise ValueError("switched and reference traces must share sampling")
    keep = np.ones(len(times), dtype=bool)
    for t_s in schedule.slot_boundaries:
        keep &= ~((times >= t_s) & (times < t_s + exclusion_s))
    diff = np.abs(np.asarray(trace_switched.output) - np.asarray(trace_reference.output))
    den = max(float(np.max(np.abs(trace_reference.output))), 1e-12)
    if not np.any(keep):
        return 0.0
    return float(np.max(diff[keep])) / den
