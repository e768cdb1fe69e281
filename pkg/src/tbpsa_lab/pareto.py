"""Hypervolume indicator and multiobjective scalarization.

All objectives are minimized and the reference point must be componentwise
worse than any contributing point; points that do not strictly dominate the
reference are ignored. The two-objective case has an exact sweep; higher
dimensions fall back to a Monte Carlo estimator with a reported standard
error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .rng import make_generator

__all__ = [
    "ParetoSet",
    "hypervolume",
    "hypervolume_exact_2d",
    "hypervolume_monte_carlo",
    "nondominated",
    "HypervolumeScalarizer",
]


@dataclass(eq=False)
class ParetoSet:
    """Objective vectors plus the reference point they are measured against."""

    points: np.ndarray
    reference: np.ndarray

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.reference = np.asarray(self.reference, dtype=float)
        if self.points.size == 0:
            self.points = self.points.reshape(0, self.reference.size)
        if self.points.ndim != 2 or self.points.shape[1] != self.reference.size:
            raise ValueError(
                f"points must be (n, {self.reference.size}), got {self.points.shape}"
            )
        if self.reference.ndim != 1 or self.reference.size < 2:
            raise ValueError("reference must be a vector with at least 2 objectives")


def _dominating_reference(points: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Keep only points strictly below the reference in every objective."""
    if points.shape[0] == 0:
        return points
    return points[np.all(points < reference, axis=1)]


def nondominated(points: np.ndarray) -> np.ndarray:
    """The minimization Pareto front of a point set (duplicates collapsed)."""
    points = np.unique(np.asarray(points, dtype=float), axis=0)
    if points.shape[0] <= 1:
        return points
    keep = np.ones(points.shape[0], dtype=bool)
    for i in range(points.shape[0]):
        if not keep[i]:
            continue
        dominated = np.all(points <= points[i], axis=1) & np.any(points < points[i], axis=1)
        if dominated.any():
            keep[i] = False
    return points[keep]


def hypervolume_exact_2d(points: np.ndarray, reference: np.ndarray) -> float:
    """Exact sweep for two objectives: sum of rectangle slabs against the
    reference, over the nondominated front sorted by the first objective."""
    reference = np.asarray(reference, dtype=float)
    if reference.size != 2:
        raise ValueError("exact hypervolume supports exactly 2 objectives")
    front = nondominated(_dominating_reference(np.asarray(points, dtype=float), reference))
    if front.shape[0] == 0:
        return 0.0
    front = front[np.argsort(front[:, 0])]
    total = 0.0
    upper = reference[1]
    for f1, f2 in front:
        total += (reference[0] - f1) * (upper - f2)
        upper = f2
    return float(total)


def hypervolume_monte_carlo(
    points: np.ndarray,
    reference: np.ndarray,
    samples: int = 20_000,
    rng: np.random.Generator | int | None = None,
) -> tuple[float, float]:
    """Estimate the dominated volume inside the reference box.

    Returns ``(estimate, standard_error)``. The sampling box spans from the
    componentwise minimum of the contributing points to the reference.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    reference = np.asarray(reference, dtype=float)
    pts = _dominating_reference(np.asarray(points, dtype=float), reference)
    if pts.shape[0] == 0:
        return 0.0, 0.0
    if rng is None or isinstance(rng, int):
        rng = make_generator(0 if rng is None else rng)
    lower = pts.min(axis=0)
    volume = float(np.prod(reference - lower))
    if volume == 0.0:
        return 0.0, 0.0
    hits = 0
    chunk = max(1, min(samples, 200_000 // max(1, pts.shape[0])))
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = lower + (reference - lower) * rng.random((n, reference.size))
        dominated = np.any(np.all(pts[None, :, :] <= u[:, None, :], axis=2), axis=1)
        hits += int(dominated.sum())
        done += n
    p = hits / samples
    estimate = volume * p
    se = volume * float(np.sqrt(p * (1.0 - p) / samples))
    return estimate, se


def hypervolume(
    pareto: ParetoSet,
    method: str = "exact",
    samples: int = 20_000,
    rng: np.random.Generator | int | None = None,
) -> float:
    """Hypervolume of a Pareto set; ``method`` is ``exact`` (2 objectives
    only) or ``monte-carlo`` (any number, estimator value only)."""
    if method == "exact":
        return hypervolume_exact_2d(pareto.points, pareto.reference)
    if method == "monte-carlo":
        return hypervolume_monte_carlo(pareto.points, pareto.reference, samples, rng)[0]
    raise ValueError(f"unknown hypervolume method {method!r}")


class HypervolumeScalarizer:
    """Turn several objectives into one stateful scalar objective.

    Each call evaluates all objectives at ``x``, scores
    ``-hypervolume(archive + new point)`` and then admits the point into the
    archive, so minimizing the scalar maximizes the hypervolume of everything
    visited. The value therefore depends on evaluation order by design. The
    archive is pruned to its nondominated front, which leaves the
    hypervolume unchanged.
    """

    def __init__(
        self,
        objectives: Sequence[Callable[[np.ndarray], float]],
        reference: np.ndarray,
        method: str = "exact",
        samples: int = 20_000,
        seed: int = 0,
    ) -> None:
        if len(objectives) < 2:
            raise ValueError("scalarization needs at least 2 objectives")
        self.objectives = list(objectives)
        self.reference = np.asarray(reference, dtype=float)
        if self.reference.shape != (len(objectives),):
            raise ValueError("reference length must match the number of objectives")
        if method not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown hypervolume method {method!r}")
        self.method = method
        self.samples = samples
        self._rng = make_generator(seed)
        self.archive: np.ndarray = np.empty((0, len(objectives)))

    def __call__(self, x: np.ndarray) -> float:
        y = np.array([float(f(x)) for f in self.objectives])
        candidate = np.vstack([self.archive, y[None, :]])
        if self.method == "exact":
            value = hypervolume_exact_2d(candidate, self.reference)
        else:
            value, _ = hypervolume_monte_carlo(
                candidate, self.reference, self.samples, self._rng
            )
        self.archive = nondominated(_dominating_reference(candidate, self.reference))
        return -value
