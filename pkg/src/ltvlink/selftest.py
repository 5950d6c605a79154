"""Built-in analytic oracle suite for `ltvlink selftest`.

Each check compares library output against an independent closed form
(exponential step responses, an integrating-factor solution, quadrature
means, a direct DFT) and prints one PASS/FAIL line.  The suite is a
quick field check, not a replacement for the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .commute import SynthesisParams, commutativity_indicator, synthesize_pair_order1
from .ltvsys import SystemState, average_eigenvalues, make_system
from .scenario import bundled_scenario_names, load_bundled
from .signalgen import ConstantLevel, SignalSpec
from .simulate import SolverConfig, integrate_cascade
from .spectrum import Window, parseval_mismatch, periodogram
from .timefn import Constant, normalize, parse_expression, render

__all__ = ["run_selftest"]


def _lti_error(step):
    one = Constant(1.0)
    sys1 = make_system(1, [one, one], horizon=1.0)
    cfg = SolverConfig(horizon=1.0, step=step)
    trace = integrate_cascade(sys1, sys1, SignalSpec((ConstantLevel(1.0),)), cfg)
    return abs(float(trace.transmitted[-1]) - (1.0 - math.exp(-1.0)))


def _ltv_error(step):
    one = Constant(1.0)
    sys_ltv = make_system(1, [one, parse_expression("1 + cos(pi*t)")], horizon=5.0)
    helper = make_system(1, [one, one], horizon=5.0)
    cfg = SolverConfig(horizon=5.0, step=step)
    trace = integrate_cascade(
        sys_ltv, helper, SignalSpec((ConstantLevel(0.0),)), cfg,
        initial=(SystemState((1.0,)), SystemState((0.0,))),
    )
    exact = np.exp(-trace.times - np.sin(np.pi * trace.times) / np.pi)
    return float(np.max(np.abs(trace.transmitted - exact)))


def _example1_system():
    return make_system(
        2,
        [
            Constant(1.0),
            parse_expression("2 + 2*sin(2*pi*t)"),
            parse_expression("5 - 1/2*cos(4*pi*t) + 2*sin(2*pi*t) + 2*pi*cos(2*pi*t)"),
        ],
        horizon=20.0,
        label="A",
    )


def _checks():
    yield "rk4_lti_step_response", _lti_error(1e-3) < 1e-10

    yield "rk4_ltv_integrating_factor", _ltv_error(1e-3) < 1e-9

    ratio_lti = _lti_error(1e-2) / _lti_error(5e-3)
    ratio_ltv = _ltv_error(1e-2) / _ltv_error(5e-3)
    yield "rk4_step_halving_order", 14.0 <= ratio_lti <= 18.0 and 14.0 <= ratio_ltv <= 18.0

    verdict = commutativity_indicator(_example1_system())
    yield "indicator_constant", (
        verdict.is_constant
        and abs(verdict.constant_value - 3.5) < 1e-9
        and verdict.max_deviation_from_mean < 1e-9
    )

    report = average_eigenvalues(_example1_system(), 1.0)
    expect = sorted((complex(-1, -2), complex(-1, 2)), key=lambda z: (z.real, z.imag))
    yield "average_eigenvalues", all(
        abs(a - b) < 1e-8 for a, b in zip(report.eigenvalues, expect)
    )

    one = Constant(1.0)
    a_weak = make_system(1, [one, parse_expression("1 + cos(pi*t)")], horizon=40.0)
    a_strong = make_system(1, [one, parse_expression("5 + cos(pi*t)")], horizon=40.0)
    b_weak, _ = synthesize_pair_order1(a_weak, SynthesisParams.first_order(1.0, 1.0))
    b_strong, _ = synthesize_pair_order1(a_strong, SynthesisParams.first_order(1.0, -3.0))
    target = normalize(parse_expression("2 + cos(pi*t)"))
    yield "first_order_synthesis", (
        normalize(b_weak.coefficients[1]) == target
        and normalize(b_strong.coefficients[1]) == target
    )

    rng = np.random.default_rng(7)
    series = rng.standard_normal(512)
    ps = periodogram(series, 100.0, Window.HANN)
    k = np.arange(len(series))
    direct = np.array(
        [
            abs(np.sum((series - series.mean())
                       * (0.5 - 0.5 * np.cos(2 * np.pi * k / len(series)))
                       * np.exp(-2j * np.pi * f * k / len(series)))) ** 2
            for f in range(len(series) // 2 + 1)
        ]
    )
    w = 0.5 - 0.5 * np.cos(2 * np.pi * k / len(series))
    direct /= 100.0 * np.sum(w * w)
    direct[1:-1] *= 2.0
    rel = float(np.max(np.abs(ps.power - direct)) / np.max(direct))
    yield "periodogram_direct_dft", rel < 1e-9

    yield "parseval_identity", parseval_mismatch(series, 100.0, Window.HANN) < 1e-6

    ok = True
    for name in bundled_scenario_names():
        scn = load_bundled(name)
        for spec in filter(None, (scn.system_a, scn.system_b)):
            for coeff in spec.coefficients:
                if normalize(parse_expression(render(coeff))) != normalize(coeff):
                    ok = False
    yield "expression_roundtrip_bundled", ok


def run_selftest():
    """Run every check; print one line each; return a shell exit code."""
    failures = 0
    for name, passed in _checks():
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        if not passed:
            failures += 1
    if failures:
        print(f"{failures} check(s) failed")
    return 1 if failures else 0
