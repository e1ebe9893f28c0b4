"""The doubling lemma on finite metric spaces.

Given M >= 0 on a metric space (X, d), y with M(y) > 0 and k > 0, there is x with M(x) >= M(y)
such that M(z) <= 2 M(x) whenever d(z, x) <= k / M(x). On a finite space the proof is an algorithm:
while the ball around the current point holds a violator, move to one. M at least doubles with every
move, so the walk ends after at most log2(max M / M(y)) + 1 moves.
"""
import dataclasses
import math
from typing import Hashable, List, Sequence, Tuple, Union

import numpy as np

from src.config import config
from src.errors import DomainError
from src.utils import pylogger

log = pylogger.ContextLogger(__name__)

SpaceTimePoint = Tuple[Sequence[float], float]


def parabolic_distance(a: SpaceTimePoint, b: SpaceTimePoint) -> float:
    """|x - x'| + sqrt(|t - t'|)."""
    (x, t), (y, s) = a, b
    return float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))) + math.sqrt(
        abs(float(t) - float(s))
    )


def _pairwise_parabolic(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    spatial = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    return spatial + np.sqrt(np.abs(t[:, None] - t[None, :]))


@dataclasses.dataclass(frozen=True)
class FiniteMetricSpace:
    """Labelled points with their distance matrix, validated as a metric on construction."""

    points: List[Hashable]
    dist: np.ndarray

    def __post_init__(self):
        dist = np.asarray(self.dist, dtype=float)
        points = list(self.points)
        n = len(points)
        if dist.shape != (n, n):
            raise DomainError(f"distance matrix must be {n}x{n}, got {dist.shape}")
        if len(set(points)) != n:
            raise DomainError("point identifiers must be unique")
        if not np.all(np.isfinite(dist)) or np.any(dist < 0.0):
            raise DomainError("distances must be finite and nonnegative")
        if np.any(np.diag(dist) != 0.0):
            raise DomainError("distance of a point to itself must be 0")
        slack = config.doubling.triangle_tol * (float(dist.max()) if n else 0.0)
        if np.any(np.abs(dist - dist.T) > slack):
            raise DomainError("distance matrix must be symmetric")
        off = ~np.eye(n, dtype=bool)
        if np.any(dist[off] == 0.0):
            raise DomainError("distinct points must have positive distance")
        for j in range(n):
            # d(a, b) <= d(a, j) + d(j, b) for every pair through j
            if np.any(dist > dist[:, j, None] + dist[None, j, :] + slack):
                raise DomainError(f"triangle inequality fails through point {points[j]!r}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "dist", dist)

    @property
    def size(self) -> int:
        return len(self.points)

    def index(self, point: Union[Hashable, int]) -> int:
        if point in self.points:
            return self.points.index(point)
        if isinstance(point, (int, np.integer)) and 0 <= point < self.size:
            return int(point)
        raise DomainError(f"unknown point {point!r}")


@dataclasses.dataclass(frozen=True)
class WeightFunction:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise DomainError("weights must be a finite nonnegative vector")
        object.__setattr__(self, "values", values)

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])


@dataclasses.dataclass(frozen=True)
class DoublingResult:
    index: int
    point: Hashable
    M_x: float
    ball_radius: float
    iterations: int

    def to_json(self) -> dict:
        return {"x": self.point, "M_x": self.M_x, "ball_radius": self.ball_radius, "iterations": self.iterations}


def _check_inputs(space: FiniteMetricSpace, M: WeightFunction, k: float) -> None:
    if M.values.size != space.size:
        raise DomainError(f"{M.values.size} weights for {space.size} points")
    if not k > 0.0:
        raise DomainError(f"k must be positive, got {k}")


def doubling_point(space: FiniteMetricSpace, M: WeightFunction, y: Union[Hashable, int], k: float) -> DoublingResult:
    """Walks from y to a point x satisfying both conclusions of the doubling lemma.

    A move goes to the violator with the largest M in the current ball, ties broken by the smallest
    index. Only points with M >= M(y) are ever considered.

    Raises:
        DomainError: if M(y) = 0, k <= 0 or the inputs do not fit together.
    """
    _check_inputs(space, M, k)
    start = space.index(y)
    weights = M.values
    if not weights[start] > 0.0:
        raise DomainError(f"M({space.points[start]!r}) must be positive")

    eligible = weights >= weights[start]
    x, iterations = start, 0
    while True:
        radius = k / weights[x]
        violators = np.flatnonzero(eligible & (space.dist[x] <= radius) & (weights > 2.0 * weights[x]))
        if not violators.size:
            break
        x = int(violators[np.argmax(weights[violators])])
        iterations += 1

    log.debug(f"doubling walk from {space.points[start]!r} ended at {space.points[x]!r} after {iterations} moves")
    return DoublingResult(
        index=x,
        point=space.points[x],
        M_x=float(weights[x]),
        ball_radius=float(k / weights[x]),
        iterations=iterations,
    )


def verify_doubling(space: FiniteMetricSpace, M: WeightFunction, y: Union[Hashable, int], k: float, x: Union[Hashable, int]) -> bool:
    """Exhaustive check of M(x) >= M(y) and M(z) <= 2M(x) for every z with d(z, x) <= k/M(x)."""
    _check_inputs(space, M, k)
    i, j = space.index(x), space.index(y)
    if M[i] < M[j] or not M[i] > 0.0:
        return False
    radius = k / M[i]
    for z in range(space.size):
        if space.dist[i, z] <= radius and M[z] > 2.0 * M[i]:
            return False
    return True


def iteration_bound(M: WeightFunction, y: int) -> float:
    """log2(max M / M(y)) + 1."""
    return math.log2(float(np.max(M.values)) / M[y]) + 1.0


def random_space(n: int, dim: int, rng: np.random.Generator, horizon: float = 1.0) -> FiniteMetricSpace:
    """n random space-time points in [0, 1]^dim x [0, horizon] under the parabolic distance."""
    if n < 1 or dim < 1:
        raise DomainError("need at least one point and one spatial dimension")
    x = rng.uniform(0.0, 1.0, size=(n, dim))
    t = rng.uniform(0.0, horizon, size=n)
    return FiniteMetricSpace(points=[f"p{i}" for i in range(n)], dist=_pairwise_parabolic(x, t))


def random_weights(n: int, rng: np.random.Generator, spread: float = 8.0) -> WeightFunction:
    """Log-uniform positive weights spanning ``spread`` octaves."""
    return WeightFunction(2.0 ** rng.uniform(0.0, spread, size=n))


def load_space(document: dict) -> Tuple[FiniteMetricSpace, WeightFunction]:
    """Reads {"points": [...], "dist": [[...]], "M": [...]}."""
    missing = {"points", "dist", "M"} - set(document)
    if missing:
        raise DomainError(f"space document lacks {sorted(missing)}")
    space = FiniteMetricSpace(points=list(document["points"]), dist=np.asarray(document["dist"], dtype=float))
    return space, WeightFunction(np.asarray(document["M"], dtype=float))
