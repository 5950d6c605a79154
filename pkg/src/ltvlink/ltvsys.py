"""First- and second-order linear time-varying systems.

A system is ``a_n(t) y^(n) + ... + a_0(t) y = x`` with coefficients
given as :class:`~ltvlink.timefn.TimeFunction` expressions, n in {1, 2}.
The module provides the state-space right-hand side used by the
integrator and two stability heuristics: eigenvalues of the
coefficient-averaged system and eigenvalues of the system frozen at an
instant.  Both are reported, never asserted; judging stability is left
to the caller.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass

import numpy as np

from .timefn import TimeFunction, evaluate, normalize

__all__ = [
    "LtvSystem",
    "SystemState",
    "EigenvalueReport",
    "EigenvalueKind",
    "make_system",
    "state_derivative",
    "average_eigenvalues",
    "frozen_eigenvalues",
    "DegenerateLeadingCoefficient",
    "ArityError",
    "LEADING_EPS",
]

LEADING_EPS = 1e-6

_LEADING_GRID_POINTS = 10_001
_SIMPSON_SUBINTERVALS = 10_000


class DegenerateLeadingCoefficient(ValueError):
    """The leading coefficient drops below the positivity floor."""


#: Synonym used by the synthesis layer when a transformed leading
#: coefficient fails the same grid check.
NonPositiveLeading = DegenerateLeadingCoefficient


class ArityError(ValueError):
    """Wrong number of coefficients for the requested order."""


@dataclass(frozen=True)
class LtvSystem:
    """An order-1 or order-2 LTV system, coefficients highest first."""

    order: int
    coefficients: tuple[TimeFunction, ...]
    horizon: float
    label: str = ""

    @property
    def leading(self):
        return self.coefficients[0]


@dataclass(frozen=True)
class SystemState:
    """Instantaneous state: [y] for order 1, [y, dy/dt] for order 2."""

    values: tuple[float, ...]
    time: float = 0.0


class EigenvalueKind(enum.Enum):
    AVERAGE_OVER_PERIOD = "average_over_period"
    FROZEN_AT_INSTANT = "frozen_at_instant"


@dataclass(frozen=True)
class EigenvalueReport:
    eigenvalues: tuple[complex, ...]
    kind: EigenvalueKind
    period_or_instant: float


def make_system(order, coefficients, horizon, label=""):
    """Validated system constructor.

    The leading coefficient is required to stay >= LEADING_EPS on a
    10^4-point grid over [0, horizon].
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    coefficients = tuple(coefficients)
    if len(coefficients) != order + 1:
        raise ArityError(
            f"order {order} needs {order + 1} coefficients, got {len(coefficients)}"
        )
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    coefficients = tuple(normalize(c) for c in coefficients)
    check_leading(coefficients[0], horizon, label)
    return LtvSystem(order, coefficients, float(horizon), label)


def check_leading(coefficient, horizon, label=""):
    """Grid check that a leading coefficient stays >= LEADING_EPS."""
    grid = np.linspace(0.0, horizon, _LEADING_GRID_POINTS)
    values = evaluate(coefficient, grid)
    low = float(np.min(values))
    if low < LEADING_EPS:
        where = float(grid[int(np.argmin(values))])
        name = f" of system {label!r}" if label else ""
        raise DegenerateLeadingCoefficient(
            f"leading coefficient{name} reaches {low:g} at t = {where:g} "
            f"(must stay >= {LEADING_EPS:g} on [0, {horizon:g}])"
        )


def state_derivative(sys, t, state, input_value):
    """Time derivative of the state under the given input.

    Order 1: [(x - a0 y) / a1]; order 2: [dy, (x - a1 dy - a0 y) / a2].
    """
    values = state.values if isinstance(state, SystemState) else tuple(state)
    if len(values) != sys.order:
        raise ValueError(f"state length {len(values)} != order {sys.order}")
    coeffs = [evaluate(c, t) for c in sys.coefficients]
    if sys.order == 1:
        a1, a0 = coeffs
        (y,) = values
        return [(input_value - a0 * y) / a1]
    a2, a1, a0 = coeffs
    y, dy = values
    return [dy, (input_value - a1 * dy - a0 * y) / a2]


def _simpson_mean(f, period, n=_SIMPSON_SUBINTERVALS):
    """Mean of f over [0, period] by composite Simpson quadrature."""
    grid = np.linspace(0.0, period, n + 1)
    v = evaluate(f, grid)
    h = period / n
    integral = (h / 3.0) * (v[0] + v[-1] + 4.0 * v[1:-1:2].sum() + 2.0 * v[2:-1:2].sum())
    return integral / period


def _characteristic_roots(coeffs):
    if len(coeffs) == 2:
        a1, a0 = coeffs
        return (complex(-a0 / a1),)
    a2, a1, a0 = coeffs
    disc = a1 * a1 - 4.0 * a2 * a0
    root = cmath.sqrt(complex(disc))
    lam1 = (-a1 - root) / (2.0 * a2)
    lam2 = (-a1 + root) / (2.0 * a2)
    return tuple(sorted((lam1, lam2), key=lambda z: (z.real, z.imag)))


def average_eigenvalues(sys, period):
    """Eigenvalues of the system with period-averaged coefficients."""
    if not period > 0:
        raise ValueError("period must be positive")
    means = [_simpson_mean(c, period) for c in sys.coefficients]
    return EigenvalueReport(
        _characteristic_roots(means), EigenvalueKind.AVERAGE_OVER_PERIOD, float(period)
    )


def frozen_eigenvalues(sys, t):
    """Eigenvalues of the system with coefficients frozen at time t."""
    frozen = [evaluate(c, t) for c in sys.coefficients]
    if frozen[0] <= 0:
        raise DegenerateLeadingCoefficient(
            f"leading coefficient is {frozen[0]:g} at t = {t:g}"
        )
    return EigenvalueReport(
        _characteristic_roots(frozen), EigenvalueKind.FROZEN_AT_INSTANT, float(t)
    )
