"""Deterministic random-stream derivation.

Every stochastic component draws from a counter-based Philox stream keyed
by (master seed, *integer tags).  Streams derived from distinct tag tuples
are statistically independent, and a stream can be regenerated anywhere
(worker processes, replay harnesses) without caring about scheduling.

numpy guarantees: ``Generator.random`` consumes exactly one 64-bit word per
double, and chunked draws equal one-shot draws, so sequential extension of
a stream is reproducible regardless of chunk boundaries.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

# Stream tags.  Fixed protocol constants: changing any of them changes every
# derived stream, so they are part of the on-wire/fixture compatibility.
TAG_MESSAGE = 1       # Bob's uniform k-bit message
TAG_LT_DEGREE = 2     # LT output-symbol degree draws
TAG_LT_INDEX = 3      # LT index-set selection draws
TAG_CHANNEL_X = 4     # Gaussian pair, Alice-side signal
TAG_CHANNEL_Z = 5     # Gaussian pair, additive noise
TAG_BIAWGN = 6        # BIAWGN channel noise
TAG_PLAN_SEED = 7     # public per-block LT plan seed
TAG_BLOCK_PAIR = 8    # per-block channel-sample seed


def _entropy(master_seed, tags):
    vals = (int(master_seed),) + tuple(int(t) for t in tags)
    if any(v < 0 for v in vals):
        raise ValueError("seeds and stream tags must be non-negative integers")
    return vals


def derive_rng(master_seed, *tags) -> Generator:
    """Philox generator for the stream keyed by (master_seed, *tags)."""
    return Generator(Philox(SeedSequence(_entropy(master_seed, tags))))


def derive_seed(master_seed, *tags) -> int:
    """A non-negative 63-bit integer derived from (master_seed, *tags).

    Used where a single published seed is needed (e.g. the per-block LT
    plan seed that both parties share).
    """
    state = SeedSequence(_entropy(master_seed, tags)).generate_state(1, np.uint64)[0]
    return int(state) >> 1
