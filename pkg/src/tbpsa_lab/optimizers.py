"""Ask/tell optimizers: TBPSA, NaiveTBPSA, (1+1)-ES, and random search.

The optimizer never evaluates the objective itself: callers `ask` for a batch
of candidates, evaluate them (possibly in parallel and out of order), and
`tell` the results back. TBPSA samples a full generation at its current
population size; a generation may span several ask/tell exchanges and the
parent update is deferred to the generation boundary. Results inside one tell
call are processed in evaluation-index order.

TBPSA and NaiveTBPSA share the exploration state machine bit for bit and
differ only in `recommend`: the parent center versus the best evaluated point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .es_core import Candidate, EvaluatedCandidate, ParentState, mutate, recombine, select_mu_best
from .population import Decision, FitnessArchive, PopulationSize, stagnation_test, update_population
from .rng import make_generator

__all__ = [
    "ALGORITHMS",
    "OptimizerConfig",
    "BestSoFar",
    "Optimizer",
    "Tbpsa",
    "OnePlusOne",
    "RandomSearch",
    "make_optimizer",
    "OptimizerError",
    "BudgetExhaustedError",
    "NoRecommendationError",
]

ALGORITHMS = ("tbpsa", "naive-tbpsa", "one-plus-one", "random-search")

GROW_FACTOR_LOG2 = 1.0  # (1+1)-ES success: step size doubles
SHRINK_FACTOR_LOG2 = -0.25  # (1+1)-ES failure: step size times 2**(-1/4)


class OptimizerError(Exception):
    """Base class for optimizer state errors."""


class BudgetExhaustedError(OptimizerError):
    """`ask` was called after the evaluation budget was fully dispensed."""


class NoRecommendationError(OptimizerError):
    """`recommend` was called before the optimizer had enough results."""


@dataclass(frozen=True, eq=False)
class OptimizerConfig:
    dimension: int
    budget: int
    num_workers: int = 1
    seed: int = 0
    algorithm: str = "tbpsa"
    initial_center: np.ndarray | None = None
    tau: float = 1.0
    sigma_init: float | None = None

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if not 1 <= self.num_workers <= self.budget:
            raise ValueError(
                f"num_workers must be in [1, budget={self.budget}], got {self.num_workers}"
            )
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.initial_center is not None:
            center = np.asarray(self.initial_center, dtype=float)
            if center.shape != (self.dimension,) or not np.all(np.isfinite(center)):
                raise ValueError("initial_center must be a finite vector of length dimension")
            object.__setattr__(self, "initial_center", center)

    def center(self) -> np.ndarray:
        if self.initial_center is None:
            return np.zeros(self.dimension)
        return self.initial_center.copy()

    def initial_sigma(self) -> float:
        if self.sigma_init is not None:
            if self.sigma_init <= 0:
                raise ValueError(f"sigma_init must be positive, got {self.sigma_init}")
            return float(self.sigma_init)
        return 1.0 / math.sqrt(self.dimension)


@dataclass
class BestSoFar:
    """Lowest fitness seen so far; ties keep the earliest evaluation."""

    point: np.ndarray
    fitness: float
    eval_index: int

    def improves(self, fitness: float, eval_index: int) -> bool:
        return fitness < self.fitness or (
            fitness == self.fitness and eval_index < self.eval_index
        )


class Optimizer:
    """Shared ask/tell bookkeeping: budget, best-so-far, result matching."""

    def __init__(self, config: OptimizerConfig) -> None:
        self.config = config
        self.rng = make_generator(config.seed)
        self.num_asked = 0
        self.num_told = 0
        self.best: BestSoFar | None = None
        self._outstanding: dict[bytes, int] = {}

    # -- public interface --------------------------------------------------

    @property
    def remaining_budget(self) -> int:
        return self.config.budget - self.num_asked

    @property
    def generation(self) -> int:
        raise NotImplementedError

    @property
    def sigma(self) -> float:
        """Current exploration scale, for traces."""
        raise NotImplementedError

    @property
    def lambda_eff(self) -> int:
        return 1

    def ask(self, max_batch: int | None = None) -> list[Candidate]:
        if max_batch is None:
            max_batch = self.config.num_workers
        if max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {max_batch}")
        if self.remaining_budget <= 0:
            raise BudgetExhaustedError(
                f"budget of {self.config.budget} evaluations is exhausted"
            )
        batch = self._next_batch(min(max_batch, self.remaining_budget))
        assert 1 <= len(batch) <= min(max_batch, self.remaining_budget)
        for candidate in batch:
            key = candidate.key()
            self._outstanding[key] = self._outstanding.get(key, 0) + 1
        self.num_asked += len(batch)
        return batch

    def tell(self, results: Sequence[EvaluatedCandidate]) -> None:
        ordered = sorted(results, key=lambda ec: ec.eval_index)
        demanded: dict[bytes, int] = {}
        for result in ordered:
            key = result.candidate.key()
            demanded[key] = demanded.get(key, 0) + 1
            if demanded[key] > self._outstanding.get(key, 0):
                raise ValueError(
                    "told candidate was never asked (or was already told)"
                )
        for result in ordered:
            key = result.candidate.key()
            self._outstanding[key] -= 1
            if self._outstanding[key] == 0:
                del self._outstanding[key]
            if self.best is None or self.best.improves(result.fitness, result.eval_index):
                self.best = BestSoFar(
                    result.candidate.x.copy(), result.fitness, result.eval_index
                )
            self._ingest(result)
            self.num_told += 1
        if ordered:
            self._finish_tell()

    def recommend(self) -> np.ndarray:
        if self.best is None:
            raise NoRecommendationError("no evaluations were told yet")
        return self.best.point.copy()

    # -- subclass hooks ------------------------------------------------------

    def _next_batch(self, limit: int) -> list[Candidate]:
        raise NotImplementedError

    def _ingest(self, result: EvaluatedCandidate) -> None:
        pass

    def _finish_tell(self) -> None:
        pass


class Tbpsa(Optimizer):
    """Self-adaptive (mu/mu, lambda)-ES with test-based population sizing.

    ``naive=False`` recommends the current parent center; ``naive=True``
    recommends the best visited point.
    """

    def __init__(self, config: OptimizerConfig, naive: bool = False) -> None:
        super().__init__(config)
        self.naive = naive
        self.parent = ParentState(
            config.center(), config.initial_sigma(), tau=config.tau, generation=0
        )
        self.populations = PopulationSize(
            lambda_init=4 * config.dimension, num_workers=config.num_workers
        )
        self.archive = FitnessArchive()
        self._pending: list[Candidate] = []
        self._gen_pool: list[EvaluatedCandidate] = []
        self._gen_size = 0

    @property
    def generation(self) -> int:
        return self.parent.generation

    @property
    def sigma(self) -> float:
        return self.parent.sigma

    @property
    def lambda_eff(self) -> int:
        return self.populations.lambda_eff

    def _next_batch(self, limit: int) -> list[Candidate]:
        if not self._pending:
            # sample the whole generation up front so the stream of
            # candidates does not depend on how ask calls are batched
            self._gen_size = self.populations.lambda_eff
            self._pending = mutate(self.parent, self._gen_size, self.rng)
            self._gen_pool = []
        take = min(limit, len(self._pending))
        batch = self._pending[:take]
        del self._pending[:take]
        return batch

    def _ingest(self, result: EvaluatedCandidate) -> None:
        self._gen_pool.append(result)
        if self._gen_size and len(self._gen_pool) == self._gen_size:
            self._complete_generation()

    def _complete_generation(self) -> None:
        pool = sorted(self._gen_pool, key=lambda ec: ec.eval_index)
        lambda_eff = self.populations.lambda_eff
        mu = min(self.populations.mu_eff, len(pool))
        selected = [pool[i] for i in select_mu_best(pool, mu, self.rng)]
        center, sigma = recombine(selected)
        self.parent = ParentState(
            center, sigma, tau=self.parent.tau, generation=self.parent.generation + 1
        )
        self.archive.push(pool, lambda_eff)
        decision = stagnation_test(self.archive, lambda_eff)
        update_population(self.populations, decision)
        self._gen_pool = []
        self._gen_size = 0

    def recommend(self) -> np.ndarray:
        if self.naive:
            return super().recommend()
        if self.parent.generation == 0:
            raise NoRecommendationError(
                "parent recommendation needs at least one completed generation"
            )
        return self.parent.center.copy()


class OnePlusOne(Optimizer):
    """Elitist (1+1)-ES baseline with the doubling/backoff step-size rule.

    The first candidate is the initial center itself (it seeds the parent
    fitness); afterwards every candidate is a Gaussian mutation of the
    current parent. Acceptance uses <= so the parent can drift on plateaus.
    A batch of asks mutates the same parent, which keeps the baseline usable
    with parallel evaluation.
    """

    def __init__(self, config: OptimizerConfig) -> None:
        super().__init__(config)
        self._parent_x = config.center()
        self._parent_f: float | None = None
        self._sigma_init = config.initial_sigma()
        self._log2_step = 0.0
        self._generation = 0
        self._center_dispensed = False

    @property
    def generation(self) -> int:
        return self._generation

    @property
    def sigma(self) -> float:
        return self._sigma_init * 2.0**self._log2_step

    def _next_batch(self, limit: int) -> list[Candidate]:
        batch: list[Candidate] = []
        if not self._center_dispensed:
            batch.append(Candidate(self._parent_x.copy(), self.sigma))
            self._center_dispensed = True
        while len(batch) < limit:
            z = self.rng.standard_normal(self.config.dimension)
            batch.append(Candidate(self._parent_x + self.sigma * z, self.sigma))
        return batch

    def _ingest(self, result: EvaluatedCandidate) -> None:
        if self._parent_f is None:
            self._parent_x = result.candidate.x.copy()
            self._parent_f = result.fitness
            return
        if result.fitness <= self._parent_f:
            self._parent_x = result.candidate.x.copy()
            self._parent_f = result.fitness
            self._log2_step += GROW_FACTOR_LOG2
        else:
            self._log2_step += SHRINK_FACTOR_LOG2

    def _finish_tell(self) -> None:
        self._generation += 1


class RandomSearch(Optimizer):
    """Independent standard-normal sampling around the initial center."""

    def __init__(self, config: OptimizerConfig) -> None:
        super().__init__(config)
        self._center = config.center()
        self._generation = 0

    @property
    def generation(self) -> int:
        return self._generation

    @property
    def sigma(self) -> float:
        return 1.0

    def _next_batch(self, limit: int) -> list[Candidate]:
        z = self.rng.standard_normal((limit, self.config.dimension))
        return [Candidate(self._center + z[i], 1.0) for i in range(limit)]

    def _finish_tell(self) -> None:
        self._generation += 1


def make_optimizer(config: OptimizerConfig) -> Optimizer:
    if config.algorithm == "tbpsa":
        return Tbpsa(config, naive=False)
    if config.algorithm == "naive-tbpsa":
        return Tbpsa(config, naive=True)
    if config.algorithm == "one-plus-one":
        return OnePlusOne(config)
    if config.algorithm == "random-search":
        return RandomSearch(config)
    raise ValueError(f"unknown algorithm {config.algorithm!r}")
