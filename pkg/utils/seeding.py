"""Deterministic random stream derivation."""

from typing import Union

import numpy as np

# Stream identifiers mixed into derived seeds so that independent concerns
# never share a random stream.
STREAM_SPLIT = 1
STREAM_INIT = 2
STREAM_SHUFFLE = 3
STREAM_AUGMENT = 4
STREAM_SYNTH = 5
STREAM_CLASSIFIER = 6

Key = Union[int, np.integer]


def derive_seed_sequence(seed: int, *keys: Key) -> np.random.SeedSequence:
    """Seed sequence for the stream identified by (seed, *keys)."""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])


def derive_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Independent generator for (seed, trial, branch, epoch, batch, ...).

    The result depends only on the key tuple, so derived streams are stable
    regardless of the order in which branches, trials or batches are run.
    """
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, *keys)))


def derive_seed(seed: int, *keys: Key) -> int:
    """64-bit integer sub-seed for (seed, *keys)."""
    return int(derive_seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])
