"""Experiment runner: single runs, grids, pairwise scores, and exports.

A run drives one optimizer through the ask/tell loop against one objective,
evaluating batches of ``num_workers`` candidates atomically (simulated
parallelism: concurrency constrains only how many evaluations are requested
together). Traces are recorded once per optimizer generation; the
recommendation-fitness column costs extra objective calls for the
center-recommending TBPSA and is not charged against the budget.

Scoring follows the pairwise win-frequency protocol: within every grid cell
(objective, budget, workers, seed) the lower final simple regret wins, ties
split the point, and an algorithm's score is its mean win frequency over all
opponents and cells.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .benchmarks import ObjectiveSpec, evaluate, format_record, known_optimum, parse_record
from .optimizers import OptimizerConfig, Tbpsa, make_optimizer

__all__ = [
    "RunRecord",
    "ExperimentGrid",
    "ScoreMatrix",
    "NonFiniteFitnessError",
    "run_experiment",
    "run_grid",
    "score_matrix",
    "export_records",
    "import_records",
    "export_matrix",
    "parse_grid_config",
]

CSV_COLUMNS = (
    "run_id",
    "algorithm",
    "objective",
    "dimension",
    "budget",
    "num_workers",
    "seed",
    "eval_index",
    "sigma",
    "lambda_eff",
    "best_fitness",
    "reco_fitness",
)


class NonFiniteFitnessError(RuntimeError):
    """An objective returned NaN or infinity; carries the partial record."""

    def __init__(self, message: str, record: "RunRecord") -> None:
        super().__init__(message)
        self.record = record


@dataclass(eq=False)
class RunRecord:
    """Config echo plus per-generation traces of one optimization run."""

    run_id: str
    algorithm: str
    objective: str
    dimension: int
    budget: int
    num_workers: int
    seed: int
    eval_indices: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    best_fitness: list = field(default_factory=list)
    reco_fitness: list = field(default_factory=list)
    final_recommendation: list = field(default_factory=list)
    final_regret: float | None = None
    aborted: bool = False


def _objective_parts(
    objective: "ObjectiveSpec | Callable[[np.ndarray], np.ndarray] | str",
    dimension: int,
) -> tuple[Callable[[np.ndarray], np.ndarray], str, float | None]:
    """Normalize an objective into (batch function, label, known optimum value)."""
    if isinstance(objective, str):
        objective = parse_record(objective)
    if isinstance(objective, ObjectiveSpec):
        if objective.dimension != dimension:
            raise ValueError(
                f"objective dimension {objective.dimension} != config dimension {dimension}"
            )
        spec = objective
        fn = lambda x: np.atleast_1d(np.asarray(evaluate(spec, x), dtype=float))
        _, f_star = known_optimum(spec)
        return fn, format_record(spec), f_star
    label = f"callable:{getattr(objective, '__name__', 'objective')}"
    return (
        lambda x: np.atleast_1d(np.asarray(objective(x), dtype=float)),
        label,
        None,
    )


def run_experiment(
    config: OptimizerConfig,
    objective: "ObjectiveSpec | Callable[[np.ndarray], np.ndarray] | str",
    run_id: str | None = None,
) -> RunRecord:
    """Execute one full budget of ask/evaluate/tell cycles.

    Raises `NonFiniteFitnessError` (with the partial trace attached) as soon
    as the objective returns a non-finite value.
    """
    fn, label, f_star = _objective_parts(objective, config.dimension)
    optimizer = make_optimizer(config)
    record = RunRecord(
        run_id=run_id
        or f"{config.algorithm}:{label}:b{config.budget}:w{config.num_workers}:s{config.seed}",
        algorithm=config.algorithm,
        objective=label,
        dimension=config.dimension,
        budget=config.budget,
        num_workers=config.num_workers,
        seed=config.seed,
    )
    center_recommender = isinstance(optimizer, Tbpsa) and not optimizer.naive
    eval_counter = 0
    last_generation = optimizer.generation
    while optimizer.num_told < config.budget:
        batch = optimizer.ask(config.num_workers)
        points = np.stack([c.x for c in batch])
        values = fn(points)
        if not np.all(np.isfinite(values)):
            record.aborted = True
            bad = points[~np.isfinite(values)][0]
            raise NonFiniteFitnessError(
                f"objective {label!r} returned a non-finite value at {bad.tolist()}",
                record,
            )
        results = []
        for candidate, value in zip(batch, values):
            results.append(
                type(batch[0]).__mro__[0]  # placeholder, replaced below
            ) if False else None
        from .es_core import EvaluatedCandidate  # local alias for clarity

        results = [
            EvaluatedCandidate(candidate, float(value), eval_counter + i)
            for i, (candidate, value) in enumerate(zip(batch, values))
        ]
        eval_counter += len(batch)
        optimizer.tell(results)
        if optimizer.generation != last_generation:
            last_generation = optimizer.generation
            if center_recommender:
                reco_fit = float(fn(optimizer.recommend()[None, :])[0])
            else:
                reco_fit = optimizer.best.fitness
            record.eval_indices.append(eval_counter - 1)
            record.sigmas.append(float(optimizer.sigma))
            record.lambdas.append(int(optimizer.lambda_eff))
            record.best_fitness.append(float(optimizer.best.fitness))
            record.reco_fitness.append(reco_fit)
    recommendation = optimizer.recommend()
    record.final_recommendation = [float(v) for v in recommendation]
    final_fit = (
        float(fn(recommendation[None, :])[0])
        if center_recommender
        else float(optimizer.best.fitness)
    )
    record.final_regret = None if f_star is None else final_fit - f_star
    return record


@dataclass(eq=False)
class ExperimentGrid:
    """Cartesian experiment plan; objectives are plain-text records."""

    algorithms: list
    objectives: list
    budgets: list
    num_workers: list = field(default_factory=lambda: [1])
    seeds_per_cell: int = 1

    def __post_init__(self) -> None:
        for name, axis in (
            ("algorithms", self.algorithms),
            ("objectives", self.objectives),
            ("budgets", self.budgets),
            ("num_workers", self.num_workers),
        ):
            if not axis:
                raise ValueError(f"grid axis {name!r} must be non-empty")
        if self.seeds_per_cell < 1:
            raise ValueError(f"seeds_per_cell must be >= 1, got {self.seeds_per_cell}")

    @property
    def total_runs(self) -> int:
        return (
            len(self.algorithms)
            * len(self.objectives)
            * len(self.budgets)
            * len(self.num_workers)
            * self.seeds_per_cell
        )


def run_grid(grid: ExperimentGrid) -> list[RunRecord]:
    """Run every (algorithm x objective x budget x workers x seed) cell.

    The same seed is reused across algorithms within a cell, making pairwise
    comparisons paired; each run draws from its own generator, so execution
    order cannot matter.
    """
    records = []
    for objective in grid.objectives:
        spec = parse_record(objective) if isinstance(objective, str) else objective
        for budget in grid.budgets:
            for workers in grid.num_workers:
                for seed in range(grid.seeds_per_cell):
                    for algorithm in grid.algorithms:
                        config = OptimizerConfig(
                            dimension=spec.dimension,
                            budget=budget,
                            num_workers=workers,
                            seed=seed,
                            algorithm=algorithm,
                        )
                        records.append(run_experiment(config, spec))
    return records


@dataclass(eq=False)
class ScoreMatrix:
    """Pairwise win counts and the per-algorithm mean win frequency."""

    algorithms: list  # sorted by descending score
    scores: dict
    wins: dict  # (algorithm, opponent) -> cells won (ties count 0.5)
    cells: int


def score_matrix(records: Sequence[RunRecord]) -> ScoreMatrix:
    """Score a grid of records by pairwise final-regret comparisons.

    Every algorithm must appear exactly once in every cell; cells whose
    objective has no known optimum (regret ``None``) are excluded.
    """
    algorithms = sorted({r.algorithm for r in records})
    if len(algorithms) < 2:
        raise ValueError("scoring needs at least two algorithms")
    cells: dict[tuple, dict[str, float | None]] = {}
    for r in records:
        key = (r.objective, r.budget, r.num_workers, r.seed)
        cell = cells.setdefault(key, {})
        if r.algorithm in cell:
            raise ValueError(f"duplicate run for {r.algorithm!r} in cell {key}")
        cell[r.algorithm] = r.final_regret
    for key, cell in cells.items():
        if sorted(cell) != algorithms:
            raise ValueError(
                f"ragged grid: cell {key} has {sorted(cell)}, expected {algorithms}"
            )
    scored = {k: c for k, c in cells.items() if all(v is not None for v in c.values())}
    if not scored:
        raise ValueError("no scorable cells (all objectives lack a known optimum)")
    wins = {(a, b): 0.0 for a in algorithms for b in algorithms if a != b}
    for cell in scored.values():
        for i, a in enumerate(algorithms):
            for b in algorithms[i + 1 :]:
                if cell[a] < cell[b]:
                    wins[(a, b)] += 1.0
                elif cell[b] < cell[a]:
                    wins[(b, a)] += 1.0
                else:
                    wins[(a, b)] += 0.5
                    wins[(b, a)] += 0.5
    n_cells = len(scored)
    scores = {
        a: sum(wins[(a, b)] for b in algorithms if b != a)
        / ((len(algorithms) - 1) * n_cells)
        for a in algorithms
    }
    ranked = sorted(algorithms, key=lambda a: (-scores[a], a))
    return ScoreMatrix(algorithms=ranked, scores=scores, wins=wins, cells=n_cells)


# --- persistence ---------------------------------------------------------


def export_records(records: Sequence[RunRecord], fmt: str, path: str | Path) -> None:
    """Write records as JSON (verbatim mirror) or per-generation CSV rows."""
    path = Path(path)
    if fmt == "json":
        payload = [asdict(r) for r in records]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in records:
                for i in range(len(r.eval_indices)):
                    writer.writerow(
                        (
                            r.run_id,
                            r.algorithm,
                            r.objective,
                            r.dimension,
                            r.budget,
                            r.num_workers,
                            r.seed,
                            r.eval_indices[i],
                            repr(float(r.sigmas[i])),
                            r.lambdas[i],
                            repr(float(r.best_fitness[i])),
                            repr(float(r.reco_fitness[i])),
                        )
                    )
    else:
        raise ValueError(f"unknown export format {fmt!r} (use 'csv' or 'json')")


def import_records(path: str | Path) -> list[RunRecord]:
    """Read back records exported as JSON."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [RunRecord(**entry) for entry in payload]


def export_matrix(matrix: ScoreMatrix, fmt: str, path: str | Path) -> None:
    path = Path(path)
    if fmt == "json":
        payload = {
            "algorithms": matrix.algorithms,
            "scores": matrix.scores,
            "wins": [
                {"algorithm": a, "opponent": b, "wins": w}
                for (a, b), w in sorted(matrix.wins.items())
            ],
            "cells": matrix.cells,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("algorithm", "score"))
            for a in matrix.algorithms:
                writer.writerow((a, repr(float(matrix.scores[a]))))
    else:
        raise ValueError(f"unknown export format {fmt!r} (use 'csv' or 'json')")


def parse_grid_config(text: str) -> ExperimentGrid:
    """Parse the plain-text grid format: ``key = values`` lines.

    ``algorithms``, ``budgets``, and ``workers`` are comma-separated;
    ``objectives`` are semicolon-separated objective records; ``seeds`` is an
    integer. ``#`` starts a comment.
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"grid config line {lineno} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in fields:
            raise ValueError(f"duplicate grid config key {key!r}")
        fields[key] = value
    known = {"algorithms", "objectives", "budgets", "workers", "seeds"}
    unknown = set(fields) - known
    if unknown:
        raise ValueError(f"unknown grid config key(s): {sorted(unknown)}")
    missing = {"algorithms", "objectives", "budgets"} - set(fields)
    if missing:
        raise ValueError(f"grid config is missing: {sorted(missing)}")
    return ExperimentGrid(
        algorithms=[a.strip() for a in fields["algorithms"].split(",") if a.strip()],
        objectives=[o.strip() for o in fields["objectives"].split(";") if o.strip()],
        budgets=[int(b) for b in fields["budgets"].split(",")],
        num_workers=[int(w) for w in fields.get("workers", "1").split(",")],
        seeds_per_cell=int(fields.get("seeds", "1")),
    )
