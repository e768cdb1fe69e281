"""Generation-level simulation of the population-controlled ES.

This drives exactly the same primitives as the ask/tell optimizer (same
sampling kernels, same selection, same archive and population updates, same
draw order) but advances a whole generation at a time on batch objectives,
which is what the Monte Carlo verifiers need: per-generation step-size and
population traces, and first-exit detection against a ball around the start.

``schedule="adaptive"`` runs the real stagnation test; ``schedule="double"``
bypasses it and doubles the population every generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .es_core import recombine_arrays, sample_offspring, select_indices
from .population import Decision, FitnessArchive, PopulationSize, stagnation_test, update_population

__all__ = ["SimulationTrace", "run_generations", "population_schedule"]

SCHEDULES = ("adaptive", "double")


@dataclass
class SimulationTrace:
    """Per-generation history of one simulated run."""

    log_sigma: np.ndarray  # (G+1,), includes the initial value
    lambda_eff: np.ndarray  # (G,)
    mu_eff: np.ndarray  # (G,)
    center_norm: np.ndarray  # (G+1,)
    max_offset: np.ndarray  # (G,) largest ||x_i - center|| sampled
    max_step: np.ndarray  # (G,) largest sampled individual step-size
    best_fitness: np.ndarray  # (G,)
    evaluations: int
    first_exit: int | None  # global eval index of the first point outside the ball

    @property
    def generations(self) -> int:
        return self.lambda_eff.size


def run_generations(
    objective: Callable[[np.ndarray], np.ndarray],
    dimension: int,
    rng: np.random.Generator,
    *,
    tau: float = 1.0,
    generations: int | None = None,
    budget: int | None = None,
    schedule: str = "adaptive",
    exit_radius: float | None = None,
    lambda_init: int | None = None,
    num_workers: int = 1,
    sigma_init: float | None = None,
    center: np.ndarray | None = None,
) -> SimulationTrace:
    """Run the ES generation loop until a horizon, a budget, or a first exit.

    ``exit_radius`` stops the run at the first evaluated point (or recombined
    parent) with norm above the radius and records its global evaluation
    index. A final partial generation (budget smaller than lambda) is sampled
    and checked for exits but does not update the parent, mirroring the
    ask/tell optimizer.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")
    if generations is None and budget is None:
        raise ValueError("need a generations horizon or an evaluation budget")
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")

    center_vec = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
    sigma = 1.0 / math.sqrt(dimension) if sigma_init is None else float(sigma_init)
    sizes = PopulationSize(
        lambda_init=4 * dimension if lambda_init is None else int(lambda_init),
        num_workers=num_workers,
    )
    archive = FitnessArchive()

    log_sigma = [math.log(sigma)]
    center_norm = [float(np.linalg.norm(center_vec))]
    lambdas: list[int] = []
    mus: list[int] = []
    max_offset: list[float] = []
    max_step: list[float] = []
    best_fitness: list[float] = []
    evaluations = 0
    first_exit: int | None = None

    while True:
        if generations is not None and len(lambdas) >= generations:
            break
        if budget is not None and evaluations >= budget:
            break
        lam = sizes.lambda_eff
        count = lam if budget is None else min(lam, budget - evaluations)
        points, steps = sample_offspring(center_vec, sigma, tau, count, rng)
        fitness = np.asarray(objective(points), dtype=float)
        if fitness.shape != (count,):
            raise ValueError("objective must map (n, d) points to (n,) values")
        partial = count < lam

        lambdas.append(lam)
        mus.append(sizes.mu_eff)
        offsets = np.linalg.norm(points - center_vec, axis=1)
        max_offset.append(float(offsets.max()))
        max_step.append(float(steps.max()))
        best_fitness.append(float(fitness.min()))

        if exit_radius is not None:
            norms = np.linalg.norm(points, axis=1)
            outside = norms > exit_radius
            if outside.any():
                first_exit = evaluations + int(np.argmax(outside))
                evaluations += count
                break
        evaluations += count
        if partial:
            break

        mu = min(sizes.mu_eff, count)
        selected = select_indices(fitness, mu, rng)
        center_vec, sigma = recombine_arrays(points[selected], steps[selected])
        log_sigma.append(math.log(sigma))
        center_norm.append(float(np.linalg.norm(center_vec)))
        if exit_radius is not None and center_norm[-1] > exit_radius:
            first_exit = evaluations - 1
            break

        archive.push_values(
            range(evaluations - count, evaluations), fitness, lam
        )
        if schedule == "double":
            update_population(sizes, Decision.STAGNATING)
        else:
            update_population(sizes, stagnation_test(archive, lam))

    return SimulationTrace(
        log_sigma=np.asarray(log_sigma),
        lambda_eff=np.asarray(lambdas, dtype=int),
        mu_eff=np.asarray(mus, dtype=int),
        center_norm=np.asarray(center_norm),
        max_offset=np.asarray(max_offset),
        max_step=np.asarray(max_step),
        best_fitness=np.asarray(best_fitness),
        evaluations=evaluations,
        first_exit=first_exit,
    )


def population_schedule(
    dimension: int,
    generations: int,
    *,
    force_doubling: bool = False,
    lambda_init: int | None = None,
    num_workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """The deterministic (lambda, mu) sequence on a constant objective.

    On constant fitness the stagnation test depends only on how full the
    window is, so the population trajectory needs no sampling: it doubles
    whenever the window holds five lambdas' worth of values (every
    generation under ``force_doubling``).
    """
    sizes = PopulationSize(
        lambda_init=4 * dimension if lambda_init is None else int(lambda_init),
        num_workers=num_workers,
    )
    window = 0
    lambdas = np.empty(generations, dtype=int)
    mus = np.empty(generations, dtype=int)
    for g in range(generations):
        lam = sizes.lambda_eff
        lambdas[g] = lam
        mus[g] = sizes.mu_eff
        window = min(window + lam, 5 * lam)
        if force_doubling:
            update_population(sizes, Decision.STAGNATING)
        else:
            decision = Decision.STAGNATING if window >= 5 * lam else Decision.INSUFFICIENT
            update_population(sizes, decision)
    return lambdas, mus
