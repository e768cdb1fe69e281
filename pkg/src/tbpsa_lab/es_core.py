"""Core (mu/mu, lambda) evolution-strategy primitives.

Offspring carry an individual step-size drawn lognormally around the parent
step-size; selection is truncation on fitness (minimization) with uniformly
random tie-breaking; recombination is the arithmetic mean of the selected
points and the geometric mean of their step-sizes.

Everything here is a pure function of its inputs and the generator state, so
identical seeds reproduce identical outputs bit for bit. Array-level kernels
(`sample_offspring`, `select_indices`, `recombine_arrays`) are exposed for
batch simulation; the object-level API wraps them one-to-one, consuming the
generator in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "Candidate",
    "EvaluatedCandidate",
    "ParentState",
    "mutate",
    "select_mu_best",
    "recombine",
    "sample_offspring",
    "select_indices",
    "recombine_arrays",
]


@dataclass(frozen=True, eq=False)
class Candidate:
    """A search point paired with the step-size that produced it."""

    x: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.x.ndim != 1:
            raise ValueError(f"candidate x must be a vector, got shape {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("candidate coordinates must be finite")
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise ValueError(f"candidate sigma must be positive and finite, got {self.sigma}")

    @property
    def dimension(self) -> int:
        return self.x.size

    def key(self) -> bytes:
        """Value identity used to match told results to asked candidates."""
        return self.x.tobytes() + np.float64(self.sigma).tobytes()


@dataclass(frozen=True, eq=False)
class EvaluatedCandidate:
    """A candidate together with its fitness and global evaluation index."""

    candidate: Candidate
    fitness: float
    eval_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "fitness", float(self.fitness))
        object.__setattr__(self, "eval_index", int(self.eval_index))
        if not np.isfinite(self.fitness):
            raise ValueError(f"fitness must be finite, got {self.fitness}")
        if self.eval_index < 0:
            raise ValueError(f"eval_index must be nonnegative, got {self.eval_index}")


@dataclass(frozen=True, eq=False)
class ParentState:
    """Distribution center, parent step-size, and self-adaptation scale."""

    center: np.ndarray
    sigma: float
    tau: float = 1.0
    generation: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "tau", float(self.tau))
        if self.center.ndim != 1:
            raise ValueError(f"center must be a vector, got shape {self.center.shape}")
        if not np.all(np.isfinite(self.center)):
            raise ValueError("center coordinates must be finite")
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (self.tau >= 0.0 and np.isfinite(self.tau)):
            raise ValueError(f"tau must be nonnegative and finite, got {self.tau}")

    @property
    def dimension(self) -> int:
        return self.center.size


def sample_offspring(
    center: np.ndarray,
    sigma: float,
    tau: float,
    count: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` offspring; returns ``(points, step_sizes)``.

    step_sizes[i] = sigma * exp(tau * g_i) with g_i standard normal, and
    points[i] = center + step_sizes[i] * z_i with z_i standard d-normal.
    Consumes ``count`` scalar draws followed by ``count * d`` coordinate draws.
    """
    if count < 1:
        raise ValueError(f"offspring count must be >= 1, got {count}")
    g = rng.standard_normal(count)
    step_sizes = sigma * np.exp(tau * g)
    z = rng.standard_normal((count, center.size))
    points = center + step_sizes[:, None] * z
    return points, step_sizes


def mutate(parent: ParentState, count: int, rng: np.random.Generator) -> list[Candidate]:
    """Sample ``count`` candidates from the parent distribution."""
    points, step_sizes = sample_offspring(parent.center, parent.sigma, parent.tau, count, rng)
    return [Candidate(points[i], step_sizes[i]) for i in range(count)]


def select_indices(fitness: np.ndarray, mu: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of the ``mu`` smallest fitnesses, ties broken uniformly at random.

    Returned in ascending fitness order. Consumes one uniform draw per pool
    member so the stream advances identically whether or not ties occur.
    """
    fitness = np.asarray(fitness, dtype=float)
    if fitness.ndim != 1:
        raise ValueError("fitness must be one-dimensional")
    if not 1 <= mu <= fitness.size:
        raise ValueError(f"mu must be in [1, {fitness.size}], got {mu}")
    tie_keys = rng.random(fitness.size)
    order = np.lexsort((tie_keys, fitness))
    return order[:mu]


def select_mu_best(
    pool: Sequence[EvaluatedCandidate], mu: int, rng: np.random.Generator
) -> list[int]:
    """Truncation selection over an evaluated pool; see `select_indices`."""
    if len(pool) == 0:
        raise ValueError("selection pool is empty")
    fitness = np.array([ec.fitness for ec in pool], dtype=float)
    return [int(i) for i in select_indices(fitness, mu, rng)]


def recombine_arrays(points: np.ndarray, step_sizes: np.ndarray) -> tuple[np.ndarray, float]:
    """Arithmetic mean of points, geometric mean of step-sizes."""
    points = np.asarray(points, dtype=float)
    step_sizes = np.asarray(step_sizes, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("recombination needs a non-empty (n, d) point array")
    if step_sizes.shape != (points.shape[0],):
        raise ValueError("step_sizes must match the number of points")
    center = points.mean(axis=0)
    if np.all(step_sizes == step_sizes[0]):
        # equal step-sizes: their geometric mean is that value; skip the
        # exp(log(.)) round trip, which is not exact in floating point
        sigma = float(step_sizes[0])
    else:
        sigma = float(np.exp(np.mean(np.log(step_sizes))))
    return center, sigma


def recombine(selected: Sequence[EvaluatedCandidate]) -> tuple[np.ndarray, float]:
    """Recombine selected candidates into ``(new_center, new_sigma)``."""
    if len(selected) == 0:
        raise ValueError("cannot recombine an empty selection")
    points = np.stack([ec.candidate.x for ec in selected])
    step_sizes = np.array([ec.candidate.sigma for ec in selected], dtype=float)
    return recombine_arrays(points, step_sizes)
