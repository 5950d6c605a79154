"""Deterministic test-input generators.

An input signal is a sum of primitive terms: sines, sawtooth waves,
pulse trains and constant levels.  Sampling is pure and stateless, and
works on scalars or numpy arrays.

Conventions (fixed for reproducibility): the sawtooth ramps from
``min_value`` to ``max_value`` over each period and resets
instantaneously, taking the value ``min_value`` at the reset instant;
pulse trains are high for the first ``duty_fraction`` of each period;
all primitives have phase 0 at t = 0 unless a sine phase is given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Sine",
    "Sawtooth",
    "PulseTrain",
    "ConstantLevel",
    "SignalSpec",
    "sample",
]


@dataclass(frozen=True)
class Sine:
    amplitude: float
    frequency_hz: float
    phase_rad: float = 0.0

    def _sample(self, t):
        return self.amplitude * np.sin(
            2.0 * np.pi * self.frequency_hz * t + self.phase_rad
        )


@dataclass(frozen=True)
class Sawtooth:
    period_s: float
    min_value: float
    max_value: float

    def __post_init__(self):
        if not self.period_s > 0:
            raise ValueError("sawtooth period must be positive")
        if not self.min_value < self.max_value:
            raise ValueError("sawtooth needs min_value < max_value")

    def _sample(self, t):
        frac = np.mod(t / self.period_s, 1.0)
        return self.min_value + (self.max_value - self.min_value) * frac


@dataclass(frozen=True)
class PulseTrain:
    amplitude: float
    period_s: float
    duty_fraction: float

    def __post_init__(self):
        if not self.period_s > 0:
            raise ValueError("pulse period must be positive")
        if not 0.0 < self.duty_fraction < 1.0:
            raise ValueError("duty fraction must lie strictly between 0 and 1")

    def _sample(self, t):
        frac = np.mod(t / self.period_s, 1.0)
        return np.where(frac < self.duty_fraction, self.amplitude, 0.0)


@dataclass(frozen=True)
class ConstantLevel:
    value: float

    def _sample(self, t):
        return np.broadcast_to(np.float64(self.value), np.shape(t))


_PRIMITIVES = (Sine, Sawtooth, PulseTrain, ConstantLevel)


@dataclass(frozen=True)
class SignalSpec:
    """A sum of primitive waveform terms."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if not isinstance(term, _PRIMITIVES):
                raise TypeError(f"unknown signal term {term!r}")

    def __call__(self, t):
        return sample(self, t)


def sample(spec, t):
    """Signal value at time t (scalar or ndarray), the sum over terms."""
    t_arr = np.asarray(t, dtype=float)
    total = np.zeros(t_arr.shape)
    for term in spec.terms:
        total = total + term._sample(t_arr)
    if t_arr.ndim == 0:
        return float(total)
    return total
