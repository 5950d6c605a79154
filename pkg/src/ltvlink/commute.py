"""Synthesis and verification of commutative system pairs.

A second-order system A admits a family of partners B whose cascade
with A realizes the same input-output map in either order (under zero
initial conditions).  The family is parameterized by three constants
(k2, k1, k0) through a coefficient transformation built on the
feedthrough function f = (2 a1 - da2/dt) / (4 sqrt(a2)); for k1 != 0
the construction requires the indicator a0 - f^2 - sqrt(a2) * df/dt to
be constant in time.  First-order systems always admit partners via
(c1, c0); choosing slowly time-varying c1(t), c0(t) instead of
constants gives pseudo-commutative pairs that commute only
approximately.  Numerical commutation quality is measured by simulating
both chain orders and comparing outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ltvsys import LEADING_EPS, NonPositiveLeading, make_system
from .simulate import integrate_cascade, relative_sup_deviation
from .timefn import (
    Constant,
    Negate,
    Power,
    Product,
    RootQuotient,
    Sum,
    TimeFunction,
    differentiate,
    evaluate,
    normalize,
)

__all__ = [
    "SynthesisParams",
    "CommutativityVerdict",
    "NotApplicableError",
    "feedthrough_fn",
    "commutativity_indicator",
    "synthesize_pair_order2",
    "synthesize_pair_order1",
    "nonzero_ic_condition",
    "commutation_deviation",
    "CONSTANCY_EPS",
]

CONSTANCY_EPS = 1e-6
_INDICATOR_SAMPLES = 1000
_UNIT_SUM_TOL = 1e-12


class NotApplicableError(ValueError):
    """The requested check is undefined for these parameters."""


@dataclass(frozen=True)
class SynthesisParams:
    """Parameters of the pair transformation.

    Order 2 uses three real gains (k2, k1, k0) with k2 > 0.  Order 1
    uses two time functions (c1, c0); constants give an exactly
    commutative partner, anything time-varying a pseudo-commutative
    one.
    """

    order: int
    k2: float | None = None
    k1: float | None = None
    k0: float | None = None
    c1: TimeFunction | None = None
    c0: TimeFunction | None = None

    def __post_init__(self):
        if self.order == 2:
            if self.k2 is None or self.k1 is None or self.k0 is None:
                raise ValueError("order-2 synthesis needs k2, k1, k0")
            if not self.k2 > 0:
                raise ValueError("k2 must be positive to keep the leading coefficient")
        elif self.order == 1:
            if self.c1 is None or self.c0 is None:
                raise ValueError("order-1 synthesis needs c1, c0")
            object.__setattr__(self, "c1", normalize(self.c1))
            object.__setattr__(self, "c0", normalize(self.c0))
        else:
            raise ValueError("order must be 1 or 2")

    @classmethod
    def gains(cls, k2, k1, k0):
        return cls(order=2, k2=float(k2), k1=float(k1), k0=float(k0))

    @classmethod
    def first_order(cls, c1, c0):
        c1 = c1 if isinstance(c1, TimeFunction) else Constant(c1)
        c0 = c0 if isinstance(c0, TimeFunction) else Constant(c0)
        return cls(order=1, c1=c1, c0=c0)

    def is_constant(self):
        if self.order == 2:
            return True
        return isinstance(normalize(self.c1), Constant) and isinstance(
            normalize(self.c0), Constant
        )


@dataclass(frozen=True)
class CommutativityVerdict:
    """Sampled constancy report for a commutativity indicator.

    For order 2 the indicator is a0 - f^2 - sqrt(a2)*df/dt and
    ``is_constant`` decides whether the synthesized family commutes
    exactly (zero initial conditions) for k1 != 0.  For order 1 the
    indicator is c1 + c0 - 1, whose value governs operation under
    non-zero initial conditions; there ``max_deviation_from_mean``
    tracks the worst time variation of either parameter, so
    ``is_constant`` means the pair is exactly (not pseudo-)
    commutative.  ``nonzero_ic_ok`` is None for order-2 verdicts.
    """

    indicator: TimeFunction
    is_constant: bool
    constant_value: float
    max_deviation_from_mean: float
    nonzero_ic_ok: bool | None = None


def _sampled_constancy(f, horizon, n=_INDICATOR_SAMPLES):
    grid = np.linspace(0.0, horizon, n)
    values = evaluate(f, grid)
    mean = float(np.mean(values))
    dev = float(np.max(np.abs(values - mean)))
    return mean, dev


def _constancy_flag(dev, mean):
    return dev <= CONSTANCY_EPS * max(1.0, abs(mean))


def feedthrough_fn(A):
    """The feedthrough function (2 a1 - da2/dt) / (4 sqrt(a2)).

    Returned as a normalized TimeFunction; when a2 is constant the
    root-quotient folds into a plain scale.
    """
    if A.order != 2:
        raise ValueError("feedthrough function is defined for order-2 systems")
    a2, a1, _ = A.coefficients
    numerator = Product(
        Constant(0.25),
        Sum(Product(Constant(2.0), a1), Negate(differentiate(a2))),
    )
    return normalize(RootQuotient(numerator, a2, 1))


def commutativity_indicator(A):
    """Constancy verdict for a0 - f^2 - sqrt(a2) * df/dt on A's horizon."""
    if A.order != 2:
        raise ValueError("the commutativity indicator is defined for order-2 systems")
    a2, _, a0 = A.coefficients
    f = feedthrough_fn(A)
    indicator = normalize(
        Sum(
            a0,
            Negate(Product(f, f)),
            Negate(Product(Power(a2, 0.5), differentiate(f))),
        )
    )
    mean, dev = _sampled_constancy(indicator, A.horizon)
    return CommutativityVerdict(
        indicator=indicator,
        is_constant=_constancy_flag(dev, mean),
        constant_value=mean,
        max_deviation_from_mean=dev,
        nonzero_ic_ok=None,
    )


def synthesize_pair_order2(A, params):
    """Partner system from the order-2 transformation.

    b2 = a2 k2, b1 = a1 k2 + sqrt(a2) k1, b0 = a0 k2 + f k1 + k0.
    Returns (B, verdict): B is built unconditionally; the attached
    verdict says whether the family is exactly commutative (it is, for
    k1 != 0, precisely when the indicator is constant).
    """
    if A.order != 2 or params.order != 2:
        raise ValueError("order-2 synthesis needs an order-2 system and parameters")
    a2, a1, a0 = A.coefficients
    f = feedthrough_fn(A)
    b2 = normalize(Product(a2, Constant(params.k2)))
    b1 = normalize(
        Sum(
            Product(a1, Constant(params.k2)),
            Product(Power(a2, 0.5), Constant(params.k1)),
        )
    )
    b0 = normalize(
        Sum(
            Product(a0, Constant(params.k2)),
            Product(f, Constant(params.k1)),
            Constant(params.k0),
        )
    )
    label = f"{A.label}*" if A.label else "B"
    B = make_system(2, (b2, b1, b0), A.horizon, label)
    return B, commutativity_indicator(A)


def synthesize_pair_order1(A, params):
    """Partner system from the order-1 transformation.

    b1 = a1 c1, b0 = a0 c1 + c0.  Constant parameters give an exactly
    commutative pair under zero initial conditions; time-varying ones a
    pseudo-commutative pair.  Returns (B, verdict); see
    :class:`CommutativityVerdict` for the order-1 verdict semantics.
    """
    if A.order != 1 or params.order != 1:
        raise ValueError("order-1 synthesis needs an order-1 system and parameters")
    a1, a0 = A.coefficients
    b1 = normalize(Product(a1, params.c1))
    b0 = normalize(Sum(Product(a0, params.c1), params.c0))
    grid = np.linspace(0.0, A.horizon, _INDICATOR_SAMPLES)
    lead = evaluate(b1, grid)
    if float(np.min(lead)) < LEADING_EPS:
        raise NonPositiveLeading(
            f"synthesized leading coefficient drops to {float(np.min(lead)):g}"
        )
    label = f"{A.label}*" if A.label else "B"
    B = make_system(1, (b1, b0), A.horizon, label)

    mean1, dev1 = _sampled_constancy(params.c1, A.horizon)
    mean0, dev0 = _sampled_constancy(params.c0, A.horizon)
    indicator = normalize(Sum(params.c1, params.c0, Constant(-1.0)))
    mean = mean1 + mean0 - 1.0
    dev = max(dev1, dev0)
    is_constant = _constancy_flag(dev, mean)
    verdict = CommutativityVerdict(
        indicator=indicator,
        is_constant=is_constant,
        constant_value=mean,
        max_deviation_from_mean=dev,
        nonzero_ic_ok=bool(is_constant and abs(mean) <= _UNIT_SUM_TOL),
    )
    return B, verdict


def nonzero_ic_condition(params):
    """Whether constant order-1 parameters satisfy c1 + c0 = 1.

    That is the extra condition under which the synthesized pair
    commutes even from non-zero initial conditions.  Raises
    :class:`NotApplicableError` for order-2 or time-varying parameters.
    """
    if params.order != 1:
        raise NotApplicableError("the unit-sum condition applies to order-1 pairs")
    c1 = normalize(params.c1)
    c0 = normalize(params.c0)
    if not isinstance(c1, Constant) or not isinstance(c0, Constant):
        raise NotApplicableError("the unit-sum condition needs constant parameters")
    return abs(c1.value + c0.value - 1.0) <= _UNIT_SUM_TOL


def commutation_deviation(A, B, input_signal, cfg):
    """Relative sup-norm disagreement between the two chain orders.

    Simulates A->B and B->A from zero initial conditions with the same
    input and returns sup|y_AB - y_BA| / max(sup|y_AB|, 1e-12), sampled
    at the solver output times.
    """
    trace_ab = integrate_cascade(A, B, input_signal, cfg)
    trace_ba = integrate_cascade(B, A, input_signal, cfg)
    return relative_sup_deviation(trace_ab.output, trace_ba.output)
