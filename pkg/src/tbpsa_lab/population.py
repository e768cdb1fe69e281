"""Population-size control driven by a stagnation test on recent fitnesses.

A rolling archive keeps the last ``5 * lambda`` fitness values. At each
generation boundary the oldest lambda and newest lambda entries of that
window are compared with a two-sample z-criterion: if their means are not
two standard errors apart the search is considered stagnating and both
lambda and mu are doubled, otherwise they shrink by 2**(-1/4), never below
the initial value or the requested degree of parallelism.

Population sizes are tracked in log2 space so that one doubling and four
shrink steps cancel exactly (+1 - 4 * 0.25 == 0 in floating point).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .es_core import EvaluatedCandidate

__all__ = [
    "Decision",
    "FitnessArchive",
    "PopulationSize",
    "stagnation_test",
    "update_population",
    "WINDOW_FACTOR",
    "SHRINK_LOG2",
]

WINDOW_FACTOR = 5  # archive capacity, in multiples of the current lambda
SHRINK_LOG2 = -0.25  # log2 of the shrink factor 2**(-1/4)


class Decision(enum.Enum):
    STAGNATING = "stagnating"
    PROGRESSING = "progressing"
    INSUFFICIENT = "insufficient"


@dataclass
class FitnessArchive:
    """Ordered (eval_index, fitness) history, trimmed to the 5-lambda window."""

    eval_indices: list[int] = field(default_factory=list)
    fitnesses: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.fitnesses)

    def push_values(
        self, eval_indices: Sequence[int], fitnesses: Sequence[float], lambda_eff: int
    ) -> None:
        """Append a batch and trim the oldest entries beyond ``5 * lambda_eff``.

        Batch indices must be strictly increasing and exceed everything already
        stored; the trim uses the lambda in force at push time, so growing
        lambda retroactively widens the window.
        """
        if lambda_eff < 1:
            raise ValueError(f"lambda_eff must be >= 1, got {lambda_eff}")
        if len(eval_indices) != len(fitnesses):
            raise ValueError("eval_indices and fitnesses must have equal length")
        last = self.eval_indices[-1] if self.eval_indices else -1
        for idx in eval_indices:
            if idx <= last:
                raise ValueError(
                    f"eval_index {idx} out of order (must exceed {last})"
                )
            last = idx
        self.eval_indices.extend(int(i) for i in eval_indices)
        self.fitnesses.extend(float(f) for f in fitnesses)
        capacity = WINDOW_FACTOR * lambda_eff
        if len(self.fitnesses) > capacity:
            drop = len(self.fitnesses) - capacity
            del self.eval_indices[:drop]
            del self.fitnesses[:drop]

    def push(self, batch: Iterable[EvaluatedCandidate], lambda_eff: int) -> None:
        entries = list(batch)
        self.push_values(
            [ec.eval_index for ec in entries],
            [ec.fitness for ec in entries],
            lambda_eff,
        )

    def oldest(self, n: int) -> np.ndarray:
        return np.asarray(self.fitnesses[:n], dtype=float)

    def newest(self, n: int) -> np.ndarray:
        return np.asarray(self.fitnesses[-n:], dtype=float)


def stagnation_test(archive: FitnessArchive, lambda_eff: int) -> Decision:
    """Two-sample z-criterion on the window's oldest vs newest lambda entries.

    Returns INSUFFICIENT until the window holds ``5 * lambda_eff`` values.
    Otherwise PROGRESSING iff |mean(old) - mean(new)| exceeds twice
    sqrt(var(old)/lambda + var(new)/lambda) with unbiased variances; the
    all-constant case (zero difference, zero spread) counts as STAGNATING.
    """
    if lambda_eff < 1:
        raise ValueError(f"lambda_eff must be >= 1, got {lambda_eff}")
    if len(archive) < WINDOW_FACTOR * lambda_eff:
        return Decision.INSUFFICIENT
    old = archive.oldest(lambda_eff)
    new = archive.newest(lambda_eff)
    delta = abs(float(old.mean()) - float(new.mean()))
    if lambda_eff > 1:
        spread = math.sqrt(
            (float(old.var(ddof=1)) + float(new.var(ddof=1))) / lambda_eff
        )
    else:
        spread = 0.0
    return Decision.PROGRESSING if delta > 2.0 * spread else Decision.STAGNATING


@dataclass
class PopulationSize:
    """Continuous lambda/mu pair with a fixed mu/lambda ratio of 1/4.

    The internal value lives in log2 space; rounding happens only at the
    point of use (`lambda_eff`, `mu_eff`).
    """

    lambda_init: int
    num_workers: int = 1
    log2_lambda: float = field(init=False)

    def __post_init__(self) -> None:
        if self.lambda_init < 1:
            raise ValueError(f"lambda_init must be >= 1, got {self.lambda_init}")
        if self.num_workers < 1:
            raise ValueError(f"num_workers must be >= 1, got {self.num_workers}")
        self.log2_lambda = math.log2(self.floor)

    @property
    def floor(self) -> int:
        """Effective lambda never drops below this."""
        return max(self.lambda_init, self.num_workers)

    @property
    def lambda_real(self) -> float:
        return 2.0 ** self.log2_lambda

    @property
    def mu_real(self) -> float:
        return 2.0 ** (self.log2_lambda - 2.0)

    @property
    def lambda_eff(self) -> int:
        return int(round(self.lambda_real))

    @property
    def mu_eff(self) -> int:
        return max(1, int(round(self.mu_real)))


def update_population(sizes: PopulationSize, decision: Decision) -> None:
    """Apply one decision in place: x2 on stagnation, x2**(-1/4) on progress."""
    if decision is Decision.STAGNATING:
        sizes.log2_lambda += 1.0
    elif decision is Decision.PROGRESSING:
        sizes.log2_lambda += SHRINK_LOG2
    elif decision is not Decision.INSUFFICIENT:
        raise ValueError(f"unknown decision {decision!r}")
    if sizes.lambda_eff < sizes.floor:
        # clamp the underlying value, preserving the mu/lambda ratio
        sizes.log2_lambda = math.log2(sizes.floor)
