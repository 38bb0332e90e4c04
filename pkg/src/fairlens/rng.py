"""Seeded random generators with fixed cross-platform semantics.

Every stochastic operation in the package takes an explicit integer seed
and builds its generator here.  The algorithm is numpy's PCG64, whose
stream is specified and stable across platforms and numpy versions, so
equal seeds give bit-identical results everywhere.  Derived per-key
streams (e.g. one per group) come from ``SeedSequence((seed, index))``
with keys taken in sorted order, so adding records never perturbs other
groups' draws.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

__all__ = ["generator", "keyed_generators"]


def generator(seed: int) -> np.random.Generator:
    """PCG64 generator for a seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def keyed_generators(seed: int, keys: Iterable[str]) -> dict[str, np.random.Generator]:
    """One independent generator per key, derived from (seed, sorted position)."""
    out = {}
    for idx, key in enumerate(sorted(keys)):
        seq = np.random.SeedSequence((seed, idx))
        out[key] = np.random.Generator(np.random.PCG64(seq))
    return out
