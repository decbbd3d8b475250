"""Gappy multichannel signals, trials and overlapping segmentation.

A trial holds the sampling instants that survived artefact removal.  All
channels share one set of time stamps, so a trial is stored as a time vector
plus an ``(n_channels, n_samples)`` value matrix; :attr:`Trial.channels`
exposes the per-channel :class:`TimeStampedSeries` view.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, WindowTooLong

# Slack for comparing float time stamps against window edges.
TIME_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _check_times(times):
    if times.ndim != 1:
        raise ConfigError("times must be one-dimensional")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        bad = int(np.argmin(np.diff(times) > 0)) + 1
        raise ConfigError(f"times must be strictly increasing (violated at index {bad})")


@dataclass(frozen=True)
class TimeStampedSeries:
    """Retained samples of one channel: strictly increasing ``times`` (s) and ``values``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times)
        v = _frozen(self.values)
        _check_times(t)
        if v.shape != t.shape:
            raise ConfigError(f"times and values differ in shape: {t.shape} vs {v.shape}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    @classmethod
    def uniform(cls, values, sample_rate, start=0.0):
        values = np.asarray(values, dtype=float)
        return cls(start + np.arange(values.size) / sample_rate, values)


@dataclass(frozen=True)
class Trial:
    """A multichannel recording with a shared retention pattern and a class label.

    ``values`` has shape ``(n_channels, n_samples)``; ``times`` has shape
    ``(n_samples,)`` and lies in ``[0, nominal_duration)``.
    """

    times: np.ndarray
    values: np.ndarray
    sample_rate: float
    nominal_duration: float
    label: int
    subject_id: int = 0
    session_id: int = 0
    trial_id: int = 0

    def __post_init__(self):
        t = _frozen(self.times)
        v = _frozen(np.atleast_2d(self.values))
        _check_times(t)
        if v.shape[1] != t.size:
            raise ConfigError(f"values have {v.shape[1]} samples but there are {t.size} time stamps")
        if self.sample_rate <= 0 or self.nominal_duration <= 0:
            raise ConfigError("sample_rate and nominal_duration must be positive")
        if t.size and (t[0] < -TIME_TOL or t[-1] >= self.nominal_duration - TIME_TOL):
            raise ConfigError("time stamps must lie in [0, nominal_duration)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def n_channels(self):
        return self.values.shape[0]

    @property
    def n_instants(self):
        """Nominal number of sampling instants before any removal."""
        return int(round(self.sample_rate * self.nominal_duration))

    @property
    def channels(self):
        return [TimeStampedSeries(self.times, row) for row in self.values]

    def relabel(self, label):
        return Trial(self.times, self.values, self.sample_rate, self.nominal_duration, label,
                     self.subject_id, self.session_id, self.trial_id)

    def with_mask(self, kept):
        """Return a copy keeping only the instants flagged in ``kept``.

        ``kept`` is indexed by nominal sampling instant (``round(t * rate)``),
        so masks compose: instants already absent stay absent.
        """
        kept = np.asarray(kept, dtype=bool)
        if kept.size != self.n_instants:
            raise ConfigError(f"mask has {kept.size} entries, trial has {self.n_instants} instants")
        idx = np.rint(self.times * self.sample_rate).astype(int)
        sel = kept[idx]
        return Trial(self.times[sel], self.values[:, sel], self.sample_rate,
                     self.nominal_duration, self.label, self.subject_id,
                     self.session_id, self.trial_id)


@dataclass(frozen=True)
class Segment:
    times: np.ndarray
    values: np.ndarray
    window_start: float
    window_length: float

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "values", _frozen(np.atleast_2d(self.values)))

    def __len__(self):
        return self.times.size

    @property
    def channels(self):
        return [TimeStampedSeries(self.times, row) for row in self.values]


@dataclass(frozen=True)
class SegmentationSpec:
    window_length: float = 1.0
    overlap_fraction: float = 0.875
    expected_count: int | None = field(default=None)

    def __post_init__(self):
        if self.window_length <= 0:
            raise ConfigError("window_length must be positive")
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError("overlap_fraction must lie in [0, 1)")

    @property
    def step(self):
        return (1.0 - self.overlap_fraction) * self.window_length


def window_starts(duration, spec):
    """Window start times, stepped in continuous time."""
    if spec.window_length > duration + TIME_TOL:
        raise WindowTooLong(f"window of {spec.window_length} s exceeds trial duration {duration} s")
    count = math.floor((duration - spec.window_length) / spec.step + TIME_TOL) + 1
    return np.arange(count) * spec.step


def segment_trial(trial, spec=SegmentationSpec()):
    """Cut ``trial`` into overlapping half-open windows ``[start, start + length)``.

    Windows are placed every ``(1 - overlap) * length`` seconds, so a 4 s trial
    with 1 s windows and 87.5 % overlap gives 25 windows.  Each segment holds
    the retained samples inside its window and may be empty.
    """
    starts = window_starts(trial.nominal_duration, spec)
    if spec.expected_count is not None and starts.size != spec.expected_count:
        raise ConfigError(f"segmentation produced {starts.size} windows, expected {spec.expected_count}")
    lo = np.searchsorted(trial.times, starts - TIME_TOL, side="left")
    hi = np.searchsorted(trial.times, starts + spec.window_length - TIME_TOL, side="left")
    return [Segment(trial.times[a:b], trial.values[:, a:b], float(s), spec.window_length)
            for s, a, b in zip(starts, lo, hi)]


def retained_fraction(trial):
    """Retained sampling instants divided by ``sample_rate * nominal_duration``."""
    return trial.times.size / (trial.sample_rate * trial.nominal_duration)
