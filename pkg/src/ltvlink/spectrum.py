"""One-sided power spectral density and a scalar spectrum distance.

The estimator is a mean-removed, windowed periodogram with density
scaling: P[k] = (2 - d_k) |DFT(w x)[k]|^2 / (rate * sum(w^2)), where
d_k removes the doubling at DC and Nyquist.  The Hann window (periodic
form) is the default for simulation traces, whose record length is not
tied to the signal periods; the rectangular window is available for
bin-aligned oracle checks.  Spectra are compared with a cosine
distance on the linear power vectors, which is bounded in [0, 1] and
invariant to positive scaling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Window",
    "PowerSpectrum",
    "periodogram",
    "spectral_distance",
    "parseval_mismatch",
    "SeriesTooShort",
    "GridMismatch",
    "MIN_SERIES_LENGTH",
]

MIN_SERIES_LENGTH = 16


class SeriesTooShort(ValueError):
    """Fewer samples than the periodogram can use."""


class GridMismatch(ValueError):
    """Spectra on different frequency grids cannot be compared."""


class Window(enum.Enum):
    RECTANGULAR = "rectangular"
    HANN = "hann"


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided PSD on [0, Nyquist], units signal^2 / Hz."""

    frequencies_hz: np.ndarray
    power: np.ndarray
    sample_rate_hz: float
    window: Window


def _window_values(window, n):
    if window is Window.RECTANGULAR:
        return np.ones(n)
    if window is Window.HANN:
        # periodic form, the spectral-analysis convention
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    raise ValueError(f"unknown window {window!r}")


def periodogram(series, sample_rate_hz, window=Window.HANN):
    """One-sided PSD of a uniformly sampled series.

    The series mean is removed before windowing.  An odd-length series
    is trimmed by one trailing sample so the grid always ends exactly
    at the Nyquist frequency.  Raises :class:`SeriesTooShort` below
    16 samples.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(x) < MIN_SERIES_LENGTH:
        raise SeriesTooShort(f"need at least {MIN_SERIES_LENGTH} samples, got {len(x)}")
    if not sample_rate_hz > 0:
        raise ValueError("sample rate must be positive")
    if len(x) % 2 == 1:
        x = x[:-1]
    n = len(x)
    w = _window_values(window, n)
    xw = (x - x.mean()) * w
    spec = np.fft.rfft(xw)
    power = (spec.real**2 + spec.imag**2) / (sample_rate_hz * np.sum(w * w))
    power[1:-1] *= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate_hz)
    return PowerSpectrum(freqs, power, float(sample_rate_hz), window)


def spectral_distance(p, q):
    """Cosine distance between power vectors, in [0, 1].

    0 means proportional spectra, 1 orthogonal ones.  Zero-power
    spectra: identical-to-zero pairs give 0, zero against non-zero
    gives 1.
    """
    if p.power.shape != q.power.shape or not np.array_equal(
        p.frequencies_hz, q.frequencies_hz
    ):
        raise GridMismatch("spectra live on different frequency grids")
    np_norm = float(np.linalg.norm(p.power))
    nq_norm = float(np.linalg.norm(q.power))
    if np_norm == 0.0 and nq_norm == 0.0:
        return 0.0
    if np_norm == 0.0 or nq_norm == 0.0:
        return 1.0
    cos = float(np.dot(p.power / np_norm, q.power / nq_norm))
    return min(max(1.0 - cos, 0.0), 1.0)


def parseval_mismatch(series, sample_rate_hz, window=Window.HANN):
    """Relative mismatch of the discrete Parseval identity.

    Compares the bin-sum integral of the one-sided PSD with the
    window-energy-normalized mean square sum(x_w^2)/sum(w^2) of the
    mean-removed windowed series (for the rectangular window that is
    exactly the series' mean square).  The bin sum is used rather than
    a trapezoid so the identity is exact up to roundoff even when the
    series carries power at DC or Nyquist.
    """
    ps = periodogram(series, sample_rate_hz, window)
    x = np.asarray(series, dtype=float)
    if len(x) % 2 == 1:
        x = x[:-1]
    w = _window_values(window, len(x))
    xw = (x - x.mean()) * w
    df = ps.frequencies_hz[1] - ps.frequencies_hz[0]
    integrated = float(np.sum(ps.power) * df)
    reference = float(np.sum(xw * xw) / np.sum(w * w))
    if reference == 0.0:
        return abs(integrated)
    return abs(integrated - reference) / reference
