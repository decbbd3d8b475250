"""Random removal of sampling instants, as isolated points or contiguous blocks.

Masks are defined over the nominal sampling instants of a whole trial and
remove an instant from every channel at once.  Both modes remove exactly
``round(p * total)`` instants.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidFraction, ParseError
from .seeding import make_rng

MAX_FRACTION = 0.8


@dataclass(frozen=True)
class RemovalSpec:
    mode: str = "point"
    fraction: float = 0.0
    block_width_mean: float = 20.0
    block_width_std: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("point", "block"):
            raise ConfigError(f"unknown removal mode {self.mode!r}")
        _check_fraction(self.fraction)
        if self.block_width_mean <= 0 or self.block_width_std < 0:
            raise ConfigError("block width mean must be positive and std non-negative")


@dataclass(frozen=True, eq=False)
class RetentionMask:
    kept: np.ndarray

    def __post_init__(self):
        k = np.array(self.kept, dtype=bool, copy=True).ravel()
        k.setflags(write=False)
        object.__setattr__(self, "kept", k)

    def __len__(self):
        return self.kept.size

    def __eq__(self, other):
        return isinstance(other, RetentionMask) and np.array_equal(self.kept, other.kept)

    @property
    def removed_count(self):
        return int(self.kept.size - np.count_nonzero(self.kept))

    @property
    def removed_fraction(self):
        return self.removed_count / self.kept.size if self.kept.size else 0.0

    def runs(self):
        """``(kept, length)`` pairs of maximal constant runs."""
        k = self.kept
        if k.size == 0:
            return []
        edges = np.flatnonzero(np.diff(k.astype(np.int8))) + 1
        bounds = np.concatenate(([0], edges, [k.size]))
        return [(bool(k[a]), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:])]

    def removed_run_lengths(self):
        return [n for kept, n in self.runs() if not kept]

    def to_rle(self):
        return " ".join(f"{'keep' if kept else 'drop'}:{n}" for kept, n in self.runs())

    @classmethod
    def from_rle(cls, text):
        parts = []
        for tok in text.split():
            m = re.fullmatch(r"(keep|drop):(\d+)", tok)
            if m is None:
                raise ParseError(f"bad run-length token {tok!r}")
            parts.append(np.full(int(m.group(2)), m.group(1) == "keep"))
        return cls(np.concatenate(parts) if parts else np.zeros(0, dtype=bool))


def _check_fraction(p):
    if not 0 <= p <= MAX_FRACTION:
        raise InvalidFraction(f"removal fraction must lie in [0, {MAX_FRACTION}], got {p}")


def _target(total, p):
    return int(round(p * total))


def point_removal(total_instants, p, seed=None):
    """Remove ``round(p * total)`` distinct instants chosen uniformly without replacement."""
    _check_fraction(p)
    rng = make_rng(seed)
    kept = np.ones(total_instants, dtype=bool)
    n = _target(total_instants, p)
    if n:
        kept[rng.choice(total_instants, size=n, replace=False)] = False
    return RetentionMask(kept)


def block_removal(total_instants, p, spec=RemovalSpec(mode="block"), seed=None):
    """Remove contiguous blocks until exactly ``round(p * total)`` instants are gone.

    Block widths are ``round(Normal(mean, std))`` clamped to ``[1, total]`` with
    uniformly drawn starts.  Blocks may overlap; the newly removed tail of the
    last block is restored so the count is exact.
    """
    _check_fraction(p)
    rng = make_rng(spec.seed if seed is None else seed)
    kept = np.ones(total_instants, dtype=bool)
    target = _target(total_instants, p)
    removed = 0
    while removed < target:
        width = int(round(rng.normal(spec.block_width_mean, spec.block_width_std)))
        width = min(max(width, 1), total_instants)
        start = int(rng.integers(0, total_instants - width + 1))
        block = np.arange(start, start + width)
        fresh = block[kept[block]]
        fresh = fresh[: target - removed]
        kept[fresh] = False
        removed += fresh.size
    return RetentionMask(kept)


def make_mask(total_instants, spec, seed=None):
    seed = spec.seed if seed is None else seed
    if spec.mode == "point":
        return point_removal(total_instants, spec.fraction, seed)
    return block_removal(total_instants, spec.fraction, spec, seed)


def apply_removal(trial, spec, seed=None):
    """Mask ``trial`` according to ``spec``; returns ``(masked_trial, mask)``."""
    mask = make_mask(trial.n_instants, spec, seed)
    return trial.with_mask(mask.kept), mask
