"""
Finite-dimensional Hilbert-space primitives.

Points are plain 1-D float64 numpy arrays. Convex sets are immutable
dataclasses that know their closed-form metric projection; intersections
are handled by Dykstra's algorithm, with a grid-search oracle kept around
for cross-checking in low dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PROJECTION_TOL = 1e-10
MAX_SWEEPS = 10_000


class DimensionError(ValueError):
    pass


class InfeasibleError(ValueError):
    """Raised when an intersection of convex sets is detected to be empty."""


def as_point(x) -> np.ndarray:
    """Coerce `x` to a finite 1-D float array."""
    p = np.array(x, dtype=float, ndmin=1)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError(f"a point must be a nonempty 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    return p


def _check_dim(x: np.ndarray, dim: int):
    if x.shape[-1] != dim:
        raise DimensionError(f"dimension mismatch: expected {dim}, got {x.shape[-1]}")


def inner(a, b) -> float:
    a, b = as_point(a), as_point(b)
    _check_dim(b, a.size)
    return float(a @ b)


def norm(a) -> float:
    return float(np.linalg.norm(a))


# ---------------------------------------------------------------------------
# Sets
# ---------------------------------------------------------------------------


class ConvexSet:
    """Base class. Subclasses implement `dim`, `violation` and `_project`."""

    dim: int

    def violation(self, points: np.ndarray) -> np.ndarray:
        """Distance-like infeasibility of each row of `points` (0 inside)."""
        raise NotImplementedError

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, z, tol: float = 0.0) -> bool:
        z = as_point(z)
        _check_dim(z, self.dim)
        return bool(self.violation(z[None, :])[0] <= tol)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """The set {z : <normal, z> <= offset}. Normals are stored unnormalized."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", as_point(self.normal))
        object.__setattr__(self, "offset", float(self.offset))
        if not np.isfinite(self.offset):
            raise ValueError("halfspace offset must be finite")
        if not np.any(self.normal) and self.offset < 0:
            raise InfeasibleError("zero normal with negative offset describes the empty set")

    @property
    def dim(self) -> int:
        return self.normal.size

    @property
    def is_whole_space(self) -> bool:
        return not np.any(self.normal)

    def violation(self, points):
        if self.is_whole_space:
            return np.zeros(len(points))
        excess = points @ self.normal - self.offset
        return np.maximum(excess, 0.0) / np.linalg.norm(self.normal)

    def _project(self, x):
        if self.is_whole_space:
            return x.copy()
        excess = float(self.normal @ x) - self.offset
        if excess <= 0.0:
            return x.copy()
        return x - (excess / float(self.normal @ self.normal)) * self.normal


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (self.radius >= 0 and np.isfinite(self.radius)):
            raise ValueError(f"radius must be finite and nonnegative, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    def violation(self, points):
        return np.maximum(np.linalg.norm(points - self.center, axis=1) - self.radius, 0.0)

    def _project(self, x):
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center + (self.radius / r) * d

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True, eq=False)
class AffineSet(ConvexSet):
    """anchor + span(directions); the rows of `directions` must be orthonormal."""

    anchor: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        anchor = as_point(self.anchor)
        V = np.array(self.directions, dtype=float).reshape(-1, anchor.size)
        if V.shape[0] and not np.allclose(V @ V.T, np.eye(V.shape[0]), atol=1e-12):
            raise ValueError("affine set directions must be orthonormal rows")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "directions", V)

    @property
    def dim(self) -> int:
        return self.anchor.size

    def _project_many(self, points):
        V = self.directions
        return self.anchor + ((points - self.anchor) @ V.T) @ V

    def violation(self, points):
        return np.linalg.norm(points - self._project_many(points), axis=1)

    def _project(self, x):
        return self._project_many(x[None, :])[0]


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float, ndmin=1)
        hi = np.array(self.upper, dtype=float, ndmin=1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be 1-D and of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError(f"invalid box bounds {lo}, {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def violation(self, points):
        gap = np.maximum(self.lower - points, points - self.upper)
        return np.linalg.norm(np.maximum(gap, 0.0), axis=1)

    def _project(self, x):
        return np.clip(x, self.lower, self.upper)

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()


@dataclass(frozen=True, eq=False)
class Singleton(ConvexSet):
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", as_point(self.point))

    @property
    def dim(self) -> int:
        return self.point.size

    def violation(self, points):
        return np.linalg.norm(points - self.point, axis=1)

    def _project(self, x):
        return self.point.copy()

    def bounding_box(self):
        return self.point.copy(), self.point.copy()


@dataclass(frozen=True, eq=False)
class WholeSpace(ConvexSet):
    dim: int

    def violation(self, points):
        return np.zeros(len(points))

    def _project(self, x):
        return x.copy()


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSet):
    sets: tuple = field(default_factory=tuple)

    def __post_init__(self):
        sets = tuple(self.sets)
        if not sets:
            raise ValueError("intersection needs at least one set")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise DimensionError(f"sets of mixed dimension {sorted(dims)}")
        object.__setattr__(self, "sets", sets)

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def violation(self, points):
        return np.max([s.violation(points) for s in self.sets], axis=0)

    def bounding_box(self):
        boxes = [s.bounding_box() for s in self.sets]
        lo = np.max([b[0] for b in boxes], axis=0)
        hi = np.min([b[1] for b in boxes], axis=0)
        return lo, hi


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    converged: bool
    iterations: int
    residual: float


def project(s: ConvexSet, x, tol: float = PROJECTION_TOL,
            max_sweeps: int = MAX_SWEEPS) -> ProjectionResult:
    """Metric projection of `x` onto `s`.

    Closed form for every variant except `Intersection`, which goes
    through :func:`dykstra_project`.
    """
    x = as_point(x)
    _check_dim(x, s.dim)
    if isinstance(s, Intersection):
        return dykstra_project(list(s.sets), x, max_sweeps=max_sweeps, tol=tol)
    return ProjectionResult(s._project(x), True, 0, 0.0)


def _raw_project(s: ConvexSet, y: np.ndarray, tol: float) -> np.ndarray:
    # inputs already validated by the caller
    if isinstance(s, Intersection):
        return dykstra_project(list(s.sets), y, tol=tol).point
    return s._project(y)


def dykstra_project(sets: Sequence[ConvexSet], x, max_sweeps: int = MAX_SWEEPS,
                    tol: float = PROJECTION_TOL) -> ProjectionResult:
    r"""Project `x` onto the intersection of `sets` with Dykstra's algorithm.

    Each sweep visits the sets in order, carrying one correction vector
    per set:

    .. math:: y = P_i(x + p_i), \quad p_i \leftarrow x + p_i - y, \quad x \leftarrow y

    The run stops when both the displacement of the iterate and the total
    change in the corrections over a sweep drop to `tol`. Failing that
    within `max_sweeps`, a feasibility probe decides between reporting a
    non-converged result and raising :class:`InfeasibleError`.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one set")
    if max_sweeps < 1 or tol <= 0:
        raise ValueError("max_sweeps must be >= 1 and tol > 0")
    x = as_point(x)
    for s in sets:
        _check_dim(x, s.dim)
    if len(sets) == 1 and not isinstance(sets[0], Intersection):
        return project(sets[0], x)

    z = x.copy()
    corr = np.zeros((len(sets), x.size))
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        start = z
        change = 0.0
        for i, s in enumerate(sets):
            y = z + corr[i]
            z = _raw_project(s, y, tol)
            new = y - z
            change += float(np.linalg.norm(new - corr[i]))
            corr[i] = new
        residual = max(float(np.linalg.norm(z - start)), change)
        if residual <= tol:
            return ProjectionResult(z, True, sweep, residual)

    if not feasibility_probe(sets, tol=tol):
        raise InfeasibleError("intersection appears to be empty")
    return ProjectionResult(z, False, max_sweeps, residual)


def feasibility_probe(sets: Sequence[ConvexSet], tol: float = PROJECTION_TOL,
                      sweeps: int = 500) -> bool:
    """Heuristic nonemptiness test for an intersection.

    Runs Dykstra from the origin for a capped number of sweeps and declares
    the intersection empty when the worst set distance stalls above `tol`.
    """
    dim = sets[0].dim
    z = np.zeros(dim)
    corr = np.zeros((len(sets), dim))
    history = []
    for _ in range(sweeps):
        for i, s in enumerate(sets):
            y = z + corr[i]
            z = _raw_project(s, y, tol)
            corr[i] = y - z
        worst = max(float(s.violation(z[None, :])[0]) for s in sets)
        if worst <= tol:
            return True
        history.append(worst)
    half = history[len(history) // 2]
    stalled = half - history[-1] <= 1e-3 * history[-1]
    return not stalled


def _feasible_grid(sets, axes, dim):
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    feasible = np.ones(len(grid), dtype=bool)
    for s in sets:
        feasible &= s.violation(grid) <= 0.0
    return grid[feasible]


def brute_force_project(sets: Sequence[ConvexSet], x, grid_step: float,
                        box: tuple | None = None, refine: int = 2,
                        max_points: int = 250_000) -> np.ndarray:
    """Grid-search nearest feasible point, for cross-checking in dim <= 3.

    The search box defaults to the bounding box of the bounded members of
    `sets`. One grid pins the distance to O(grid_step) but, where the
    minimizer sits on a curved boundary, pins the point only to
    O(sqrt(grid_step)). Each of the `refine` passes therefore keeps every
    feasible point within one cell diagonal of the best distance (a set
    that contains the minimizer's cell) and re-grids its bounding box at a
    tenth of the step, subject to `max_points` per pass.
    """
    x = as_point(x)
    sets = list(sets)
    d = x.size
    if d > 3:
        raise DimensionError("brute-force projection only supports dim <= 3")
    if box is None:
        lo, hi = Intersection(tuple(sets)).bounding_box()
    else:
        lo, hi = (np.array(b, dtype=float, ndmin=1) for b in box)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("unbounded search region; supply a box")
    step = grid_step
    pts = _feasible_grid(sets, [np.arange(l, h + 0.5 * step, step) for l, h in zip(lo, hi)], d)
    if not len(pts):
        raise InfeasibleError("no feasible grid point found")
    for _ in range(refine):
        dist = np.linalg.norm(pts - x, axis=1)
        near = pts[dist <= dist.min() + step * math.sqrt(d)]
        lo, hi = near.min(axis=0) - step, near.max(axis=0) + step
        step = max(step / 10, float(np.max(hi - lo)) / max_points ** (1 / d))
        finer = _feasible_grid(sets, [np.arange(l, h + 0.5 * step, step) for l, h in zip(lo, hi)], d)
        if len(finer):
            pts = np.vstack([pts[np.argmin(dist)][None], finer])
    return pts[np.argmin(np.linalg.norm(pts - x, axis=1))]


def _dykstra_halfspaces(A: np.ndarray, b: np.ndarray, x: np.ndarray, tol: float,
                        max_sweeps: int) -> ProjectionResult:
    # Dykstra specialised to halfspaces on plain floats; same iteration as
    # dykstra_project, without per-step array allocation.
    rows = [list(map(float, a)) for a in A]
    offs = [float(v) for v in b]
    sq = [sum(v * v for v in a) for a in rows]
    d = len(x)
    z = [float(v) for v in x]
    corr = [[0.0] * d for _ in rows]
    residual = math.inf
    for sweep in range(1, max_sweeps + 1):
        start = z
        change = 0.0
        for a, off, nn, p in zip(rows, offs, sq, corr):
            y = [zi + pi for zi, pi in zip(z, p)]
            excess = sum(ai * yi for ai, yi in zip(a, y)) - off
            if excess > 0.0:
                t = excess / nn
                z = [yi - t * ai for yi, ai in zip(y, a)]
                new = [t * ai for ai in a]
            else:
                z = y
                new = [0.0] * d
            change += math.sqrt(sum((u - v) ** 2 for u, v in zip(new, p)))
            p[:] = new
        residual = max(math.sqrt(sum((u - v) ** 2 for u, v in zip(z, start))), change)
        if residual <= tol:
            return ProjectionResult(np.array(z), True, sweep, residual)
    return ProjectionResult(np.array(z), False, max_sweeps, residual)


def project_halfspaces(normals: np.ndarray, offsets: np.ndarray, x,
                       tol: float = PROJECTION_TOL,
                       max_sweeps: int = MAX_SWEEPS) -> ProjectionResult:
    """Dykstra projection onto {z : normals @ z <= offsets} via a working set.

    Dykstra runs on the subset of constraints found violated so far; the
    most violated remaining constraint is added until the working-set
    projection satisfies all of them. A point of the full polyhedron that
    is nearest within a superset is nearest within the polyhedron, so the
    result equals the full projection.
    """
    x = as_point(x)
    A = np.asarray(normals, dtype=float).reshape(-1, x.size)
    b = np.asarray(offsets, dtype=float)
    scale = np.linalg.norm(A, axis=1)
    keep = scale > 0
    A, b, scale = A[keep], b[keep], scale[keep]
    z, working = x.copy(), []
    iterations, converged, residual = 0, True, 0.0
    while len(b):
        slack = (A @ z - b) / scale
        j = int(np.argmax(slack))
        if slack[j] <= tol or j in working:
            break
        working.append(j)
        res = _dykstra_halfspaces(A[working], b[working], x, tol, max_sweeps)
        z, converged, residual = res.point, res.converged, res.residual
        iterations += res.iterations
    return ProjectionResult(z, converged, iterations, residual)
