"""Subband powers and log-normalised feature vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyBand, NonPositivePower
from .spectral import BAND_GRID, multichannel_periodogram

POWER_FLOOR = 1e-12

DEFAULT_BANDS = ((8.0, 12.0), (13.0, 17.0), (18.0, 22.0), (23.0, 27.0))


@dataclass(frozen=True)
class SubbandSpec:
    bands: tuple = DEFAULT_BANDS

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands)
        if not bands:
            raise ConfigError("at least one band is required")
        for lo, hi in bands:
            if lo > hi:
                raise ConfigError(f"band ({lo}, {hi}) has low > high")
        edges = sorted(bands)
        for (_, hi), (lo, _) in zip(edges, edges[1:]):
            if lo <= hi:
                raise ConfigError("bands overlap")
        object.__setattr__(self, "bands", bands)

    def __len__(self):
        return len(self.bands)


@dataclass(frozen=True)
class FeatureVector:
    """Log-normalised subband powers in channel-major order.

    Element ``(q, p)`` (channel ``q``, band ``p``, both zero-based) sits at
    index ``q * band_count + p``.
    """

    values: np.ndarray
    channel_count: int
    band_count: int = 4

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).ravel()
        if v.size != self.channel_count * self.band_count:
            raise ConfigError("feature length does not match channel_count * band_count")
        if not np.all(np.isfinite(v)):
            raise ConfigError("features must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def at(self, channel, band):
        return self.values[channel * self.band_count + band]


def _band_average(frequencies, powers, spec):
    """Mean of valid (non-NaN) powers per band.  ``powers`` is (F,) or (F, N)."""
    powers = np.asarray(powers, dtype=float)
    out = []
    for lo, hi in spec.bands:
        sel = (frequencies >= lo - 1e-9) & (frequencies <= hi + 1e-9)
        block = powers[sel]
        ok = ~np.isnan(block)
        count = ok.sum(axis=0)
        if np.any(count == 0):
            raise EmptyBand(f"band ({lo:g}, {hi:g}) Hz has no valid grid frequency")
        out.append(np.where(ok, block, 0.0).sum(axis=0) / count)
    return np.array(out)


def band_powers(spectrum, spec=SubbandSpec()):
    """Arithmetic mean of the spectrum's valid powers inside each inclusive band."""
    return [float(x) for x in _band_average(spectrum.frequencies, spectrum.powers, spec)]


def assemble_features(per_channel_band_powers, floor=True):
    """Concatenate an ``(N, bands)`` array of raw powers and log-normalise.

    Each entry becomes ``log(f / sum(f))``.  With ``floor`` set, powers are
    first raised to ``1e-12 * max`` so the log stays finite.
    """
    raw = np.atleast_2d(np.asarray(per_channel_band_powers, dtype=float))
    n_channels, n_bands = raw.shape
    flat = raw.ravel()
    if floor:
        top = flat.max()
        if not top > 0:
            raise NonPositivePower("all raw powers are zero")
        flat = np.maximum(flat, POWER_FLOOR * top)
    elif np.any(flat <= 0):
        raise NonPositivePower("raw band powers must be positive")
    return FeatureVector(np.log(flat / flat.sum()), n_channels, n_bands)


def segment_features(segment, grid=BAND_GRID, spec=SubbandSpec()):
    """Feature vector of one segment: per-channel periodogram, band means, log ratio.

    Raises :class:`~gappy_bci.errors.TooFewSamples` or
    :class:`~gappy_bci.errors.EmptyBand` when the segment cannot be used.
    """
    powers = multichannel_periodogram(segment.times, segment.values, grid)
    bands = _band_average(grid.frequencies, powers, spec)  # (bands, N)
    return assemble_features(bands.T)
