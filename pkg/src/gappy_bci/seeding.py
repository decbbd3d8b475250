"""Derivation of independent child seeds from a master seed."""
import numpy as np


def derive_seed(master_seed, *keys):
    """Deterministic 63-bit seed for the stream identified by ``keys``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
