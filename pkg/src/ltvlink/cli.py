"""Command-line interface.

Subcommands::

    ltvlink run <file.scn>        run a scenario, write its artifacts
    ltvlink check <file.scn>      commutativity verdict only
    ltvlink synthesize <file.scn> print the partner system's coefficients
    ltvlink spectrum <trace.csv> --rate <hz>   PSD of an exported trace
    ltvlink selftest              run the built-in analytic oracle suite

All configuration is explicit; no environment variables are read.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import selftest as selftest_mod
from .scenario import (
    ParseError,
    SemanticError,
    build_systems,
    export_spectrum_csv,
    pair_verdict,
    parse_scenario,
    read_trace_csv,
    run_scenario,
)
from .spectrum import Window, periodogram
from .timefn import render


def _add_common(parser, out_dir=False):
    parser.add_argument("--step", type=float, default=None,
                        help="override the solver step (seconds)")
    parser.add_argument("--horizon", type=float, default=None,
                        help="override the solver horizon (seconds)")
    parser.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                        help="reject unknown scenario keys (default: on)")
    if out_dir:
        parser.add_argument("--out-dir", type=Path, default=Path("."),
                            help="directory for written artifacts")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ltvlink",
        description="Commutative LTV pairs and cascade-channel simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("file", type=Path)
    _add_common(p_run, out_dir=True)

    p_check = sub.add_parser("check", help="print the commutativity verdict")
    p_check.add_argument("file", type=Path)
    _add_common(p_check)

    p_syn = sub.add_parser("synthesize", help="print the partner coefficients")
    p_syn.add_argument("file", type=Path)
    _add_common(p_syn)

    p_spec = sub.add_parser("spectrum", help="PSD of a trace CSV column")
    p_spec.add_argument("file", type=Path)
    p_spec.add_argument("--rate", type=float, required=True,
                        help="sample rate of the trace in Hz")
    p_spec.add_argument("--column", choices=("input", "transmitted", "output"),
                        default="transmitted")
    p_spec.add_argument("--window", choices=("hann", "rectangular"), default="hann")
    p_spec.add_argument("--out", type=Path, default=None,
                        help="write the spectrum CSV here instead of stdout")

    sub.add_parser("selftest", help="run the analytic oracle suite")
    return parser


def _load(args):
    text = args.file.read_text()
    return parse_scenario(text, label=args.file.stem, strict=args.strict)


def _cmd_run(args):
    scenario = _load(args)
    result = run_scenario(scenario, args.out_dir, step=args.step, horizon=args.horizon)
    for line in result.summary:
        print(line)
    return 0


def _cmd_check(args):
    scenario = _load(args)
    cfg = _override(scenario, args)
    A, B, syn_verdict = build_systems(scenario, cfg)
    verdict = pair_verdict(A, B, syn_verdict)
    print(f"scenario = {scenario.label}")
    print(f"indicator_is_constant = {'true' if verdict.is_constant else 'false'}")
    print(f"indicator_value = {verdict.constant_value:.9g}")
    print(f"indicator_max_deviation = {verdict.max_deviation_from_mean:.9g}")
    if verdict.nonzero_ic_ok is not None:
        print(f"nonzero_ic_ok = {'true' if verdict.nonzero_ic_ok else 'false'}")
    return 0


def _override(scenario, args):
    from dataclasses import replace

    cfg = scenario.solver
    if args.step is not None or args.horizon is not None:
        cfg = replace(
            cfg,
            step=args.step if args.step is not None else cfg.step,
            horizon=args.horizon if args.horizon is not None else cfg.horizon,
        )
    return cfg


def _cmd_synthesize(args):
    scenario = _load(args)
    cfg = _override(scenario, args)
    _, B, _ = build_systems(scenario, cfg)
    source = "synthesized" if scenario.synthesis is not None else "explicit"
    print(f"scenario = {scenario.label}")
    print(f"partner = {source}, order {B.order}")
    for i, coeff in enumerate(B.coefficients):
        print(f"b{B.order - i} = {render(coeff)}")
    return 0


def _cmd_spectrum(args):
    trace = read_trace_csv(args.file.read_text())
    window = Window.HANN if args.window == "hann" else Window.RECTANGULAR
    ps = periodogram(trace[args.column], args.rate, window)
    text = export_spectrum_csv(ps)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, newline="\n")
        print(f"wrote {args.out}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "synthesize":
            return _cmd_synthesize(args)
        if args.command == "spectrum":
            return _cmd_spectrum(args)
        if args.command == "selftest":
            return selftest_mod.run_selftest()
    except (ParseError, SemanticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
