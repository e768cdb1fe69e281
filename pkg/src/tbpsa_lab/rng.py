"""Seeded random-number streams with reproducible splitting.

All stochastic code in this package draws from ``numpy.random.Generator``
instances created here. Parallel work (Monte Carlo repetitions, grid cells)
gets independent substreams via ``SeedSequence.spawn`` so that results do not
depend on execution order or on how work is sliced across workers.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = ["make_generator", "spawn_generators"]

SeedLike = "int | Sequence[int] | np.random.SeedSequence"


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.SeedSequence([int(s) for s in seed])
    return np.random.SeedSequence(int(seed))


def make_generator(seed) -> np.random.Generator:
    """A PCG64 generator for a single sequential stream.

    ``seed`` may be an int, a sequence of ints (mixed into one entropy pool),
    or a ``SeedSequence``.
    """
    return np.random.Generator(np.random.PCG64(_as_seed_sequence(seed)))


def spawn_generators(seed, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived from one root seed.

    The i-th child depends only on ``(seed, i)``, so repetition i is
    reproducible in isolation and streams never overlap.
    """
    if n < 0:
        raise ValueError(f"cannot spawn {n} generators")
    root = _as_seed_sequence(seed)
    return [np.random.Generator(np.random.PCG64(child)) for child in root.spawn(n)]
