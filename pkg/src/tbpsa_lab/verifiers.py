"""Monte Carlo verifiers for the stochastic dynamics of the population-
controlled ES.

Five checks, each returning a `VerificationReport`:

* `verify_martingale` — on a constant objective the mean drift of the log
  step-size is zero (95% CI of the Monte Carlo drift must contain 0).
* `verify_variance_bound` — with the population forcibly doubled every
  generation, the across-run variance of the log step-size stays below 2
  at every generation (within 3 standard errors of a variance estimate).
* `verify_sigma_convergence` — the tail oscillation of the log step-size
  shrinks as the horizon doubles (empirical Cauchy check).
* `verify_plateau_escape` — started inside a plateau ball, some evaluated
  point leaves it within the budget in at least a threshold fraction of runs.
* `verify_trap_retention` — started at the center of a spherical basin whose
  global optimum lies outside ``B(0, local_radius)``, no evaluated point
  leaves that ball within the budget in at least a threshold fraction of
  runs; boundedness/step-decay diagnostics are reported alongside.

"Probability one" statements are finitely checkable only as high-probability
events, so the escape/retention checks compare against configured thresholds
at configured budgets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .benchmarks import make_plateau, make_trap, objective_callable
from .rng import make_generator, spawn_generators
from .simulate import population_schedule, run_generations

__all__ = [
    "VerificationConfig",
    "VerificationReport",
    "verify_martingale",
    "verify_variance_bound",
    "verify_sigma_convergence",
    "verify_plateau_escape",
    "verify_trap_retention",
]

Z_95 = 1.959963984540054  # two-sided 95% normal quantile
MIN_RUNS_FOR_CI = 30  # below this the normal approximation is not defensible


@dataclass(eq=False)
class VerificationConfig:
    """Shared knobs for the verifiers; each check reads the fields it needs."""

    dimension: int = 2
    generations: int = 30
    runs: int = 100
    seed: int = 0
    tau: float = 1.0
    radius: float = 10.0  # plateau ball radius
    local_radius: float = 10.0  # trap ball radius
    offset: np.ndarray | None = None  # trap optimum location (default 4 * local_radius * e1)
    depth: float = 1.0  # trap depth below zero
    budget: int = 100_000
    force_doubling: bool = False
    threshold: float | None = None
    horizons: tuple[int, ...] = (16, 32, 64)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.tau < 0 or not math.isfinite(self.tau):
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")


@dataclass(eq=False)
class VerificationReport:
    """Outcome of one verifier: estimate, 95% interval, and the verdict.

    ``passed`` is a pure function of the estimate, the interval, and the
    threshold; ``details`` carries the per-generation or per-run diagnostics
    behind the headline number.
    """

    statistic: str
    estimate: float
    ci_low: float
    ci_high: float
    passed: bool
    runs: int
    elapsed_seconds: float
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict} {self.statistic}: {self.estimate:.6g} "
            f"[{self.ci_low:.6g}, {self.ci_high:.6g}] ({self.runs} runs, "
            f"{self.elapsed_seconds:.1f}s)"
        )


def _require_runs_for_ci(runs: int) -> None:
    if runs < MIN_RUNS_FOR_CI:
        raise ValueError(
            f"need at least {MIN_RUNS_FOR_CI} runs for a normal-approximation CI, got {runs}"
        )


def _probe_constant(
    objective: Callable[[np.ndarray], np.ndarray],
    dimension: int,
    rng: np.random.Generator,
    probes: int = 64,
    scale: float = 25.0,
) -> bool:
    """Heuristic constancy check: equal values at widely spread points."""
    points = scale * rng.standard_normal((probes, dimension))
    values = np.asarray(objective(points), dtype=float)
    return bool(np.all(values == values[0]))


def _binomial_ci(fraction: float, runs: int) -> tuple[float, float]:
    half = Z_95 * math.sqrt(max(fraction * (1.0 - fraction), 0.0) / runs)
    return max(0.0, fraction - half), min(1.0, fraction + half)


def verify_martingale(
    cfg: VerificationConfig,
    objective: Callable[[np.ndarray], np.ndarray] | None = None,
    *,
    allow_nonconstant: bool = False,
) -> VerificationReport:
    """Mean drift of log sigma over `cfg.generations` on a constant objective.

    Passes iff the 95% CI of the mean drift contains zero. A non-constant
    objective is rejected unless ``allow_nonconstant`` is set (the escape
    hatch exists so callers can confirm that real selection pressure moves
    the drift away from zero).
    """
    _require_runs_for_ci(cfg.runs)
    start = time.perf_counter()
    if objective is None:
        objective = objective_callable(make_plateau(cfg.dimension, math.inf))
    streams = spawn_generators(cfg.seed, cfg.runs + 1)
    if not allow_nonconstant and not _probe_constant(objective, cfg.dimension, streams[0]):
        raise ValueError("martingale check requires a constant objective")
    schedule = "double" if cfg.force_doubling else "adaptive"
    drifts = np.empty(cfg.runs)
    for i in range(cfg.runs):
        trace = run_generations(
            objective,
            cfg.dimension,
            streams[i + 1],
            tau=cfg.tau,
            generations=cfg.generations,
            schedule=schedule,
        )
        drifts[i] = trace.log_sigma[-1] - trace.log_sigma[0]
    mean = float(drifts.mean())
    sd = float(drifts.std(ddof=1)) if cfg.runs > 1 else 0.0
    half = Z_95 * sd / math.sqrt(cfg.runs)
    ci_low, ci_high = mean - half, mean + half
    return VerificationReport(
        statistic="mean log step-size drift",
        estimate=mean,
        ci_low=ci_low,
        ci_high=ci_high,
        passed=ci_low <= 0.0 <= ci_high,
        runs=cfg.runs,
        elapsed_seconds=time.perf_counter() - start,
        details={
            "generations": cfg.generations,
            "tau": cfg.tau,
            "schedule": schedule,
            "drift_sd": sd,
        },
    )


def verify_variance_bound(cfg: VerificationConfig) -> VerificationReport:
    """Across-run variance of log sigma under forced population doubling.

    Passes iff the estimated variance at every generation stays at or below
    2 plus three standard errors of the variance estimate.
    """
    if not cfg.force_doubling:
        raise ValueError("variance bound check requires force_doubling=True")
    _require_runs_for_ci(cfg.runs)
    start = time.perf_counter()
    objective = objective_callable(make_plateau(cfg.dimension, math.inf))
    streams = spawn_generators(cfg.seed, cfg.runs)
    paths = np.empty((cfg.runs, cfg.generations + 1))
    for i in range(cfg.runs):
        trace = run_generations(
            objective,
            cfg.dimension,
            streams[i],
            tau=cfg.tau,
            generations=cfg.generations,
            schedule="double",
        )
        paths[i] = trace.log_sigma
    variances = paths.var(axis=0, ddof=1)
    # SE of a sample variance under approximate normality: var * sqrt(2/(n-1))
    ses = variances * math.sqrt(2.0 / (cfg.runs - 1))
    bound = 2.0
    margins = variances - (bound + 3.0 * ses)
    worst = int(np.argmax(margins))
    passed = bool(np.all(margins <= 0.0))
    return VerificationReport(
        statistic="max variance of log step-size",
        estimate=float(variances[worst]),
        ci_low=float(variances[worst] - 3.0 * ses[worst]),
        ci_high=float(variances[worst] + 3.0 * ses[worst]),
        passed=passed,
        runs=cfg.runs,
        elapsed_seconds=time.perf_counter() - start,
        details={
            "bound": bound,
            "worst_generation": worst,
            "variances": variances.tolist(),
            "standard_errors": ses.tolist(),
        },
    )


def _tail_oscillation(log_sigma: np.ndarray) -> float:
    """Sup over the last quarter of generations of |log sigma_n - final|."""
    horizon = log_sigma.size - 1
    start = (3 * horizon) // 4
    return float(np.abs(log_sigma[start:] - log_sigma[-1]).max())


def verify_sigma_convergence(
    cfg: VerificationConfig, method: str = "closed-form"
) -> VerificationReport:
    """Cauchy-style convergence check on log sigma across doubling horizons.

    For each horizon the per-run tail oscillation (sup over the last quarter
    of |log sigma_n - log sigma_final|) is reduced to its median across runs;
    the check passes iff the medians strictly decrease as the horizon doubles.

    ``method="closed-form"`` samples the log step-size chain directly: with
    all fitness values equal, selection is a uniform mu-subset of i.i.d.
    lognormal perturbations, so each generation adds an independent
    N(0, tau^2/mu_n) increment to log sigma. That reduction is exact in
    distribution and sidesteps the exponential population blow-up, which
    makes horizons beyond ~20 generations tractable. ``method="simulate"``
    runs the full mechanism instead (small horizons only).
    """
    if method not in ("closed-form", "simulate"):
        raise ValueError(f"unknown method {method!r}")
    if len(cfg.horizons) < 2 or any(
        b <= a for a, b in zip(cfg.horizons, cfg.horizons[1:])
    ):
        raise ValueError(f"horizons must be strictly increasing, got {cfg.horizons}")
    start = time.perf_counter()
    medians: list[float] = []
    if method == "closed-form":
        rng = make_generator(cfg.seed)
        for horizon in cfg.horizons:
            _, mus = population_schedule(
                cfg.dimension, horizon, force_doubling=cfg.force_doubling
            )
            scales = cfg.tau / np.sqrt(mus.astype(float))
            increments = rng.standard_normal((cfg.runs, horizon)) * scales
            paths = np.concatenate(
                [np.zeros((cfg.runs, 1)), np.cumsum(increments, axis=1)], axis=1
            )
            tails = [_tail_oscillation(paths[i]) for i in range(cfg.runs)]
            medians.append(float(np.median(tails)))
    else:
        objective = objective_callable(make_plateau(cfg.dimension, math.inf))
        schedule = "double" if cfg.force_doubling else "adaptive"
        for horizon in cfg.horizons:
            streams = spawn_generators((cfg.seed, horizon), cfg.runs)
            tails = []
            for i in range(cfg.runs):
                trace = run_generations(
                    objective,
                    cfg.dimension,
                    streams[i],
                    tau=cfg.tau,
                    generations=horizon,
                    schedule=schedule,
                )
                tails.append(_tail_oscillation(trace.log_sigma))
            medians.append(float(np.median(tails)))
    passed = all(b < a for a, b in zip(medians, medians[1:]))
    return VerificationReport(
        statistic="median tail oscillation of log step-size (largest horizon)",
        estimate=medians[-1],
        ci_low=medians[-1],
        ci_high=medians[-1],
        passed=passed,
        runs=cfg.runs,
        elapsed_seconds=time.perf_counter() - start,
        details={
            "horizons": list(cfg.horizons),
            "medians": medians,
            "method": method,
            "tau": cfg.tau,
        },
    )


def verify_plateau_escape(cfg: VerificationConfig) -> VerificationReport:
    """Fraction of runs whose samples leave the plateau ball within budget.

    The objective is zero on the closed ball of ``cfg.radius`` around the
    start and grows outside, so while the search sits inside, the dynamics
    are exactly the constant-fitness regime. Passes iff the escape fraction
    reaches the threshold (default 0.99).
    """
    if cfg.radius < 0:
        raise ValueError(f"plateau radius must be >= 0, got {cfg.radius}")
    threshold = 0.99 if cfg.threshold is None else cfg.threshold
    start = time.perf_counter()
    objective = objective_callable(make_plateau(cfg.dimension, cfg.radius))
    streams = spawn_generators(cfg.seed, cfg.runs)
    first_exits: list[int | None] = []
    for i in range(cfg.runs):
        trace = run_generations(
            objective,
            cfg.dimension,
            streams[i],
            tau=cfg.tau,
            budget=cfg.budget,
            schedule="adaptive",
            exit_radius=cfg.radius,
        )
        first_exits.append(trace.first_exit)
    escaped = [e for e in first_exits if e is not None]
    fraction = len(escaped) / cfg.runs
    ci_low, ci_high = _binomial_ci(fraction, cfg.runs)
    median_first = float(np.median(escaped)) if escaped else math.inf
    return VerificationReport(
        statistic="plateau escape fraction",
        estimate=fraction,
        ci_low=ci_low,
        ci_high=ci_high,
        passed=fraction >= threshold,
        runs=cfg.runs,
        elapsed_seconds=time.perf_counter() - start,
        details={
            "threshold": threshold,
            "radius": cfg.radius,
            "budget": cfg.budget,
            "tau": cfg.tau,
            "median_first_escape": median_first,
            "escaped_runs": len(escaped),
        },
    )


def _h1_envelope(max_steps: np.ndarray) -> float:
    """Smallest K with max_step[n] <= K * exp(-n / K) for every generation.

    The right-hand side is increasing in K, so a bisection applies. Returns
    inf when no K up to 1e12 works (never the case for positive data, kept
    as a guard).
    """
    n = np.arange(max_steps.size, dtype=float)

    def feasible(k: float) -> bool:
        return bool(np.all(max_steps <= k * np.exp(-n / k)))

    hi = 1e-6
    while not feasible(hi):
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    lo = hi / 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def verify_trap_retention(cfg: VerificationConfig) -> VerificationReport:
    """Fraction of runs that never sample outside ``B(0, local_radius)``.

    The objective equals the sphere inside the ball and has its true optimum
    ``-depth`` outside, at ``offset``; the run starts at the basin center.
    Passes iff the retention fraction reaches the threshold (default 0.95).
    Boundedness and step-size decay diagnostics (largest parent norm,
    least-squares decay rate of the largest sampled step, and the minimal
    exponential-envelope constant) are reported, not gated on.
    """
    threshold = 0.95 if cfg.threshold is None else cfg.threshold
    start = time.perf_counter()
    spec = make_trap(cfg.dimension, cfg.local_radius, offset=cfg.offset, depth=cfg.depth)
    objective = objective_callable(spec)
    streams = spawn_generators(cfg.seed, cfg.runs)
    retained = 0
    max_center_norms: list[float] = []
    decay_rates: list[float] = []
    envelopes: list[float] = []
    for i in range(cfg.runs):
        trace = run_generations(
            objective,
            cfg.dimension,
            streams[i],
            tau=cfg.tau,
            budget=cfg.budget,
            schedule="adaptive",
            exit_radius=cfg.local_radius,
        )
        if trace.first_exit is None:
            retained += 1
        max_center_norms.append(float(trace.center_norm.max()))
        if trace.max_step.size >= 2:
            log_steps = np.log(trace.max_step)
            slope = np.polyfit(np.arange(log_steps.size), log_steps, 1)[0]
            decay_rates.append(float(slope))
            envelopes.append(_h1_envelope(trace.max_step))
    fraction = retained / cfg.runs
    ci_low, ci_high = _binomial_ci(fraction, cfg.runs)
    return VerificationReport(
        statistic="trap retention fraction",
        estimate=fraction,
        ci_low=ci_low,
        ci_high=ci_high,
        passed=fraction >= threshold,
        runs=cfg.runs,
        elapsed_seconds=time.perf_counter() - start,
        details={
            "threshold": threshold,
            "local_radius": cfg.local_radius,
            "depth": cfg.depth,
            "budget": cfg.budget,
            "tau": cfg.tau,
            "max_parent_norm": max(max_center_norms) if max_center_norms else 0.0,
            "median_step_decay_rate": float(np.median(decay_rates)) if decay_rates else math.nan,
            "median_envelope_constant": float(np.median(envelopes)) if envelopes else math.nan,
            "exited_runs": cfg.runs - retained,
        },
    )
