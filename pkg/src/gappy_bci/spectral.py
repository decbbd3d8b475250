"""Least-squares (Lomb-Scargle) periodogram for unevenly spaced samples.

For each probe angular frequency ``omega`` the model
``y(t) ~ a cos(omega t) + b sin(omega t)`` is fitted by least squares.  With

    R = sum_i [c_i, s_i]^T [c_i, s_i],   r = sum_i [c_i, s_i]^T y_i,

where ``c_i = cos(omega t_i)`` and ``s_i = sin(omega t_i)``, the fitted
coefficients are ``R^-1 r`` and the power of the fitted sinusoid averaged over
the ``T`` retained samples is ``r^T R^-1 r / T``.

The full 2x2 system is solved (no Lomb tau offset), so the estimate is exact for
any sampling pattern that leaves ``R`` well conditioned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (AllFrequenciesSingular, ConfigError, InvalidFraction,
                     SingularNormalMatrix, TooFewSamples)

MIN_SAMPLES = 8
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class FrequencyGrid:
    """Probe frequencies in Hz; angular frequencies are ``2*pi*f`` rad/s."""

    frequencies: np.ndarray

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=float, copy=True).ravel()
        if f.size == 0:
            raise ConfigError("frequency grid is empty")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ConfigError("frequencies must be positive and strictly increasing")
        f.setflags(write=False)
        object.__setattr__(self, "frequencies", f)

    @classmethod
    def arange(cls, low, high, step):
        n = int(round((high - low) / step)) + 1
        return cls(low + step * np.arange(n))

    @property
    def omegas(self):
        return 2 * np.pi * self.frequencies

    def __len__(self):
        return self.frequencies.size

    def check_nyquist(self, sample_rate):
        if self.frequencies[-1] > sample_rate / 2:
            raise ConfigError(f"grid reaches {self.frequencies[-1]} Hz, above Nyquist {sample_rate / 2} Hz")


# Grids used by the classification pipeline and the two-tone demonstration.
BAND_GRID = FrequencyGrid.arange(8.0, 27.0, 1.0)
MIXTURE_GRID = FrequencyGrid.arange(0.5, 10.0, 0.25)


@dataclass(frozen=True)
class NormalMatrixStats:
    R: np.ndarray
    r: np.ndarray
    condition_estimate: float


@dataclass(frozen=True)
class PowerSpectrum:
    """Powers on a grid.  Frequencies whose normal matrix was singular are NaN
    in ``powers`` and listed in ``skipped``."""

    grid: FrequencyGrid
    powers: np.ndarray
    sample_count: int

    @property
    def frequencies(self):
        return self.grid.frequencies

    @property
    def valid(self):
        return ~np.isnan(self.powers)

    @property
    def skipped(self):
        return tuple(float(f) for f in self.grid.frequencies[~self.valid])

    def argmax_frequency(self):
        return float(self.grid.frequencies[np.nanargmax(self.powers)])


def _condition(r11, r12, r22):
    """Condition number of the symmetric 2x2 matrix [[r11, r12], [r12, r22]]."""
    mean = 0.5 * (r11 + r22)
    rad = np.hypot(0.5 * (r11 - r22), r12)
    lam_max = mean + rad
    det = r11 * r22 - r12 * r12
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_min = np.where(lam_max > 0, det / lam_max, 0.0)
        cond = np.where(lam_min > 0, lam_max / lam_min, np.inf)
    return cond


def ls_power_matrix(times, values, omegas):
    """Vectorised core shared by every public entry point.

    ``times``: (T,), ``values``: (N, T), ``omegas``: (F,).  Returns
    ``(powers, cond)`` with shapes (F, N) and (F,).  Rows whose condition
    estimate exceeds :data:`MAX_CONDITION` are NaN.
    """
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    T = times.size
    phase = np.outer(omegas, times)
    c = np.cos(phase)
    s = np.sin(phase)
    r11 = np.einsum("ft,ft->f", c, c)
    r12 = np.einsum("ft,ft->f", c, s)
    r22 = np.einsum("ft,ft->f", s, s)
    rc = c @ values.T
    rs = s @ values.T
    cond = _condition(r11, r12, r22)
    det = r11 * r22 - r12 * r12
    ok = cond <= MAX_CONDITION
    det = np.where(ok, det, 1.0)
    # explicit inverse of R applied as a quadratic form
    quad = (r22[:, None] * rc * rc - 2 * r12[:, None] * rc * rs + r11[:, None] * rs * rs) / det[:, None]
    powers = np.maximum(quad, 0.0) / T
    powers[~ok] = np.nan
    return powers, cond


def _require_samples(n):
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"{n} retained samples, need at least {MIN_SAMPLES}")


def normal_matrix(series, omega):
    c = np.cos(omega * series.times)
    s = np.sin(omega * series.times)
    R = np.array([[c @ c, c @ s], [c @ s, s @ s]])
    r = np.array([c @ series.values, s @ series.values])
    return NormalMatrixStats(R, r, float(_condition(R[0, 0], R[0, 1], R[1, 1])))


def power_at(series, omega):
    """Least-squares power of ``series`` at angular frequency ``omega`` (rad/s)."""
    _require_samples(len(series))
    if omega <= 0:
        raise ConfigError("omega must be positive")
    powers, cond = ls_power_matrix(series.times, series.values[None, :], [omega])
    if np.isnan(powers[0, 0]):
        raise SingularNormalMatrix(f"condition estimate {cond[0]:.3g} at omega={omega}")
    return float(powers[0, 0])


def periodogram(series, grid):
    """Power at every grid frequency; singular frequencies are skipped (NaN)."""
    _require_samples(len(series))
    powers, _ = ls_power_matrix(series.times, series.values[None, :], grid.omegas)
    powers = powers[:, 0]
    if np.all(np.isnan(powers)):
        raise AllFrequenciesSingular("normal matrix singular at every grid frequency")
    powers.setflags(write=False)
    return PowerSpectrum(grid, powers, len(series))


def multichannel_periodogram(times, values, grid):
    """Periodograms of all channels sharing ``times``; returns (F, N) powers."""
    _require_samples(np.asarray(times).size)
    powers, _ = ls_power_matrix(times, values, grid.omegas)
    if np.all(np.isnan(powers)):
        raise AllFrequenciesSingular("normal matrix singular at every grid frequency")
    return powers


def normalize_by_retention(spectrum, p):
    """Divide powers by ``1 - p`` so spectra at different removal levels share a scale."""
    if not 0 <= p < 1:
        raise InvalidFraction(f"removed fraction must lie in [0, 1), got {p}")
    powers = spectrum.powers / (1.0 - p)
    powers.setflags(write=False)
    return PowerSpectrum(spectrum.grid, powers, spectrum.sample_count)
