"""Counter-based random number streams.

Every stochastic routine in the package receives either an explicit
``numpy.random.Generator`` or a seed from which it derives named substreams
via ``SeedSequence`` spawn keys.  Philox is counter-based, so streams with
distinct keys are statistically independent and a (seed, key) pair always
reproduces the same draws regardless of how many other streams exist or in
which order they are consumed.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

Seed = int | Sequence[int]


def make_rng(seed: Seed, *key: int) -> np.random.Generator:
    """Build the Philox generator for substream ``key`` of ``seed``.

    ``seed`` may be a plain integer or a sequence of integers (useful for
    deriving per-trial entropy as (experiment_seed, method_index, trial)).
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
