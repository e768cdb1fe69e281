"""Noise-free benchmark objectives, transforms, and their known optima.

The suite uses the standard literature closed forms (documented per function
below). Each base function is vectorized over rows: it accepts an ``(n, d)``
array and returns ``(n,)`` values. `evaluate` applies the optional
translation/rotation wrapper ``f(R^T (x - t))`` so the optimizer, which always
starts at the origin, can be handed an offset or rotated landscape.

Two parameterized constructions support the stochastic-dynamics verifiers:

* `make_plateau`: zero inside a ball of radius R, distance-to-ball outside;
  ``R = inf`` yields the globally constant function.
* `make_trap`: ``min(||x||^2, ||x - c||^2 - depth)`` — a spherical basin
  whose global optimum sits outside the ball ``B(0, local_radius)``. This is
  also the suite's deceptive-multimodal representative (name ``trap``).

`ObjectiveSpec` round-trips through a one-line plain-text record
(``name d=... [seed=...] [rot=1] [shift=...] [param=value ...]``) used by the
CLI and the service.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rng import make_generator

__all__ = [
    "ObjectiveSpec",
    "evaluate",
    "objective_callable",
    "known_optimum",
    "make_plateau",
    "make_trap",
    "random_rotation",
    "parse_record",
    "format_record",
    "SUITE",
]

ORTHOGONALITY_TOL = 1e-10


# --- base closed forms (minimization; all vectorized over rows) ---


def _sphere(x: np.ndarray) -> np.ndarray:
    return (x**2).sum(axis=1)


def _cigar(x: np.ndarray) -> np.ndarray:
    # x1^2 + 1e6 * sum of the rest
    return x[:, 0] ** 2 + 1e6 * (x[:, 1:] ** 2).sum(axis=1)


def _discus(x: np.ndarray) -> np.ndarray:
    return 1e6 * x[:, 0] ** 2 + (x[:, 1:] ** 2).sum(axis=1)


def _ellipsoid(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    if d == 1:
        return x[:, 0] ** 2
    weights = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return (weights * x**2).sum(axis=1)


def _rastrigin(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return 10.0 * d + (x**2 - 10.0 * np.cos(2.0 * np.pi * x)).sum(axis=1)


def _griewank(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    denom = np.sqrt(np.arange(1, d + 1, dtype=float))
    return 1.0 + (x**2).sum(axis=1) / 4000.0 - np.cos(x / denom).prod(axis=1)


def _rosenbrock(x: np.ndarray) -> np.ndarray:
    if x.shape[1] == 1:
        return (1.0 - x[:, 0]) ** 2
    a, b = x[:, :-1], x[:, 1:]
    return (100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2).sum(axis=1)


def _ackley(x: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    return (
        -20.0 * np.exp(-0.2 * np.sqrt((x**2).sum(axis=1) / d))
        - np.exp(np.cos(2.0 * np.pi * x).sum(axis=1) / d)
        + 20.0
        + math.e
    )


_LUNACEK_MU0 = 2.5


def _lunacek(x: np.ndarray) -> np.ndarray:
    # bi-Rastrigin: two spherical funnels plus a Rastrigin ripple, optimum
    # at mu0 * ones with value 0
    d = x.shape[1]
    s = 1.0 - 1.0 / (2.0 * math.sqrt(d + 20.0) - 8.2)
    mu1 = -math.sqrt((_LUNACEK_MU0**2 - 1.0) / s)
    sphere0 = ((x - _LUNACEK_MU0) ** 2).sum(axis=1)
    sphere1 = float(d) + s * ((x - mu1) ** 2).sum(axis=1)
    ripple = 10.0 * (1.0 - np.cos(2.0 * np.pi * (x - _LUNACEK_MU0))).sum(axis=1)
    return np.minimum(sphere0, sphere1) + ripple


_SCHWEFEL_OPT = 420.9687462275036


def _schwefel(x: np.ndarray) -> np.ndarray:
    return 418.9828872724339 * x.shape[1] - (x * np.sin(np.sqrt(np.abs(x)))).sum(axis=1)


def _plateau(x: np.ndarray, radius: float) -> np.ndarray:
    norms = np.sqrt((x**2).sum(axis=1))
    return np.where(norms <= radius, 0.0, norms - radius)


def _trap(x: np.ndarray, offset: np.ndarray, depth: float) -> np.ndarray:
    return np.minimum((x**2).sum(axis=1), ((x - offset) ** 2).sum(axis=1) - depth)


def _constant(x: np.ndarray, value: float) -> np.ndarray:
    return np.full(x.shape[0], value)


# name -> (params-aware callable, base optimum point builder)
_REGISTRY: dict[str, Callable[..., np.ndarray]] = {
    "sphere": _sphere,
    "cigar": _cigar,
    "discus": _discus,
    "ellipsoid": _ellipsoid,
    "rastrigin": _rastrigin,
    "griewank": _griewank,
    "rosenbrock": _rosenbrock,
    "ackley": _ackley,
    "lunacek": _lunacek,
    "schwefel": _schwefel,
    "plateau": _plateau,
    "trap": _trap,
    "constant": _constant,
}

SUITE = tuple(sorted(_REGISTRY))

_DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "plateau": {"radius": 1.0},
    "trap": {"local_radius": 2.0, "depth": 1.0},
    "constant": {"value": 0.0},
}

_VECTOR_PARAMS = {"offset"}


@dataclass(eq=False)
class ObjectiveSpec:
    """A named benchmark instance: base form + optional translation/rotation."""

    name: str
    dimension: int
    translation: np.ndarray | None = None
    rotation: np.ndarray | None = None
    params: dict = field(default_factory=dict)
    rotation_seed: int | None = None  # kept when the rotation came from a seed

    def __post_init__(self) -> None:
        if self.name not in _REGISTRY:
            raise ValueError(f"unknown objective {self.name!r}; choose from {SUITE}")
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        merged = dict(_DEFAULT_PARAMS.get(self.name, {}))
        merged.update(self.params)
        self.params = merged
        if self.name == "trap":
            self.params.setdefault(
                "offset", 4.0 * self.params["local_radius"] * _unit_vector(self.dimension)
            )
            self.params["offset"] = np.asarray(self.params["offset"], dtype=float)
            _check_trap_params(
                self.dimension,
                self.params["local_radius"],
                self.params["offset"],
                self.params["depth"],
            )
        if self.translation is not None:
            self.translation = np.asarray(self.translation, dtype=float)
            if self.translation.shape != (self.dimension,):
                raise ValueError(
                    f"translation must have shape ({self.dimension},), "
                    f"got {self.translation.shape}"
                )
            if not np.all(np.isfinite(self.translation)):
                raise ValueError("translation must be finite")
        if self.rotation is not None:
            self.rotation = np.asarray(self.rotation, dtype=float)
            if self.rotation.shape != (self.dimension, self.dimension):
                raise ValueError("rotation must be a d x d matrix")
            residual = self.rotation.T @ self.rotation - np.eye(self.dimension)
            if np.abs(residual).max() > ORTHOGONALITY_TOL:
                raise ValueError("rotation is not orthogonal within 1e-10 per entry")


def _unit_vector(dimension: int) -> np.ndarray:
    e = np.zeros(dimension)
    e[0] = 1.0
    return e


def _check_trap_params(
    dimension: int, local_radius: float, offset: np.ndarray, depth: float
) -> None:
    if depth <= 0:
        raise ValueError(f"trap depth must be positive, got {depth}")
    if local_radius < 0:
        raise ValueError(f"trap local_radius must be nonnegative, got {local_radius}")
    if offset.shape != (dimension,):
        raise ValueError(f"trap offset must have shape ({dimension},)")
    # inside B(0, local_radius) the trap must coincide with the sphere:
    # worst case is the boundary point nearest the offset
    required = local_radius + math.sqrt(local_radius**2 + depth)
    norm = float(np.linalg.norm(offset))
    if norm < required:
        raise ValueError(
            f"trap offset norm {norm:.6g} too small; needs >= "
            f"local_radius + sqrt(local_radius^2 + depth) = {required:.6g}"
        )


def _base_values(spec: ObjectiveSpec, x: np.ndarray) -> np.ndarray:
    fn = _REGISTRY[spec.name]
    if spec.name == "plateau":
        return fn(x, spec.params["radius"])
    if spec.name == "trap":
        return fn(x, spec.params["offset"], spec.params["depth"])
    if spec.name == "constant":
        return fn(x, spec.params["value"])
    return fn(x)


def evaluate(spec: ObjectiveSpec, x: np.ndarray) -> float | np.ndarray:
    """Objective value(s) at ``x``: a d-vector, or an (n, d) batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.dimension:
        raise ValueError(
            f"point dimension {x.shape[-1] if x.ndim else '?'} does not match "
            f"objective dimension {spec.dimension}"
        )
    if spec.translation is not None:
        x = x - spec.translation
    if spec.rotation is not None:
        x = x @ spec.rotation
    values = _base_values(spec, x)
    return float(values[0]) if single else values


def objective_callable(spec: ObjectiveSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Bind a spec into a plain batch function ``(n, d) -> (n,)``."""
    return lambda x: evaluate(spec, np.atleast_2d(np.asarray(x, dtype=float)))


_BASE_OPTIMA: dict[str, Callable[[ObjectiveSpec], np.ndarray]] = {
    "sphere": lambda s: np.zeros(s.dimension),
    "cigar": lambda s: np.zeros(s.dimension),
    "discus": lambda s: np.zeros(s.dimension),
    "ellipsoid": lambda s: np.zeros(s.dimension),
    "rastrigin": lambda s: np.zeros(s.dimension),
    "griewank": lambda s: np.zeros(s.dimension),
    "ackley": lambda s: np.zeros(s.dimension),
    "rosenbrock": lambda s: np.ones(s.dimension),
    "lunacek": lambda s: np.full(s.dimension, _LUNACEK_MU0),
    "schwefel": lambda s: np.full(s.dimension, _SCHWEFEL_OPT),
    "plateau": lambda s: np.zeros(s.dimension),
    "trap": lambda s: np.asarray(s.params["offset"], dtype=float),
    "constant": lambda s: np.zeros(s.dimension),
}


def known_optimum(spec: ObjectiveSpec) -> tuple[np.ndarray, float]:
    """An argmin of the instance and its objective value.

    The base optimum is mapped through the instance transform
    (``x = t + R x_base``); the value is computed by evaluation so it is
    consistent with `evaluate` to the last bit.
    """
    base = _BASE_OPTIMA[spec.name](spec)
    point = base
    if spec.rotation is not None:
        point = spec.rotation @ point
    if spec.translation is not None:
        point = point + spec.translation
    return point, float(evaluate(spec, point))


def make_plateau(dimension: int, radius: float) -> ObjectiveSpec:
    """Zero on the closed ball of ``radius``, distance to it outside.

    ``radius = inf`` gives the globally constant zero function.
    """
    if radius < 0:
        raise ValueError(f"plateau radius must be >= 0, got {radius}")
    return ObjectiveSpec("plateau", dimension, params={"radius": float(radius)})


def make_trap(
    dimension: int,
    local_radius: float,
    offset: np.ndarray | None = None,
    depth: float = 1.0,
) -> ObjectiveSpec:
    """``min(||x||^2, ||x - offset||^2 - depth)``: a local spherical basin at
    the origin with the global minimum ``-depth`` at ``offset``.

    Defaults to ``offset = 4 * local_radius * e1``, which satisfies the
    construction requirement ``||offset|| >= local_radius +
    sqrt(local_radius^2 + depth)`` keeping the function equal to the sphere
    on all of ``B(0, local_radius)``.
    """
    params: dict = {"local_radius": float(local_radius), "depth": float(depth)}
    if offset is not None:
        params["offset"] = np.asarray(offset, dtype=float)
    return ObjectiveSpec("trap", dimension, params=params)


def random_rotation(dimension: int, seed: int) -> np.ndarray:
    """Seeded Haar-like orthogonal matrix: QR of a Gaussian matrix with the
    diagonal signs of R fixed."""
    rng = make_generator(seed)
    gauss = rng.standard_normal((dimension, dimension))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


# --- plain-text records -------------------------------------------------

_SCALAR_PARAM_KEYS = ("radius", "local_radius", "depth", "value")


def format_record(spec: ObjectiveSpec) -> str:
    """One-line serialization, parseable by `parse_record`."""
    parts = [spec.name, f"d={spec.dimension}"]
    if spec.rotation is not None:
        if spec.rotation_seed is None:
            raise ValueError(
                "only seed-derived rotations serialize; this spec has an explicit matrix"
            )
        parts.append(f"seed={spec.rotation_seed}")
        parts.append("rot=1")
    if spec.translation is not None:
        parts.append("shift=" + ",".join(repr(float(v)) for v in spec.translation))
    defaults = _DEFAULT_PARAMS.get(spec.name, {})
    for key in _SCALAR_PARAM_KEYS:
        if key in spec.params and spec.params[key] != defaults.get(key):
            parts.append(f"{key}={repr(float(spec.params[key]))}")
    if spec.name == "trap":
        default_offset = 4.0 * spec.params["local_radius"] * _unit_vector(spec.dimension)
        if not np.array_equal(spec.params["offset"], default_offset):
            parts.append(
                "offset=" + ",".join(repr(float(v)) for v in spec.params["offset"])
            )
    return " ".join(parts)


def parse_record(record: str) -> ObjectiveSpec:
    """Parse ``name d=... [seed=...] [rot=1] [shift=...] [param=value ...]``."""
    tokens = record.split()
    if not tokens:
        raise ValueError("empty objective record")
    name = tokens[0]
    fields: dict[str, str] = {}
    for token in tokens[1:]:
        if "=" not in token:
            raise ValueError(f"malformed objective field {token!r} (expected key=value)")
        key, value = token.split("=", 1)
        if key in fields:
            raise ValueError(f"duplicate objective field {key!r}")
        fields[key] = value
    if "d" not in fields:
        raise ValueError(f"objective record {record!r} is missing d=<dimension>")
    dimension = int(fields.pop("d"))
    seed = int(fields.pop("seed")) if "seed" in fields else None
    rotation = None
    rotation_seed = None
    if fields.pop("rot", "0") not in ("0", ""):
        if seed is None:
            raise ValueError("rot=1 requires seed=<int>")
        rotation = random_rotation(dimension, seed)
        rotation_seed = seed
    translation = None
    if "shift" in fields:
        values = [float(v) for v in fields.pop("shift").split(",")]
        if len(values) == 1:
            values = values * dimension
        translation = np.asarray(values, dtype=float)
    params: dict = {}
    for key in list(fields):
        if key in _SCALAR_PARAM_KEYS:
            params[key] = float(fields.pop(key))
        elif key in _VECTOR_PARAMS:
            params[key] = np.asarray(
                [float(v) for v in fields.pop(key).split(",")], dtype=float
            )
    if fields:
        raise ValueError(f"unknown objective field(s): {sorted(fields)}")
    return ObjectiveSpec(
        name,
        dimension,
        translation=translation,
        rotation=rotation,
        params=params,
        rotation_seed=rotation_seed,
    )
