"""
Polyhedral outer approximations of the attractive set A(T).

A point z is attractive for T when |Tx - z| <= |x - z| for every x in C.
Squaring and expanding, each x contributes the halfspace

    2 <x - Tx, z> <= |x|^2 - |Tx|^2,

whose boundary is the perpendicular bisector of [x, Tx]. Intersecting
these over a finite sample of C gives a closed convex superset of A(T)
that shrinks as samples are added.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hilbert import (PROJECTION_TOL, ConvexSet, Halfspace, Intersection,
                      ProjectionResult, WholeSpace, as_point, project,
                      project_halfspaces)
from .mappings import (RESIDUAL_TOL, Mapping, PreconditionError,
                       attractive_residual, is_fixed_point,
                       quasinonexpansive_residual, sample_schedule)


def attractive_halfspace(T: Mapping, x, tol: float = RESIDUAL_TOL) -> Halfspace:
    """Halfspace of points at least as close to Tx as to x.

    Returns the whole space (zero normal, zero offset) when x is fixed
    within `tol`.
    """
    x = as_point(x)
    tx = T(x)
    if np.linalg.norm(x - tx) <= tol:
        return Halfspace(np.zeros_like(x), 0.0)
    return Halfspace(2.0 * (x - tx), float(x @ x - tx @ tx))


@dataclass(frozen=True, eq=False)
class AttractiveApprox:
    normals: np.ndarray
    offsets: np.ndarray
    sample_points: np.ndarray
    mapping_label: str
    tol: float = RESIDUAL_TOL
    whole_space: bool = False
    projection_tol: float = PROJECTION_TOL

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def halfspaces(self) -> list[Halfspace]:
        return [Halfspace(a, b) for a, b in zip(self.normals, self.offsets)]

    def as_set(self) -> ConvexSet:
        if self.whole_space:
            return WholeSpace(self.dim)
        return Intersection(tuple(self.halfspaces))

    @cached_property
    def _scale(self):
        return np.linalg.norm(self.normals, axis=1)

    def violation(self, points) -> np.ndarray:
        """Largest distance from each point to a violated halfspace."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not len(self.offsets):
            return np.zeros(len(pts))
        excess = (pts @ self.normals.T - self.offsets) / self._scale
        return np.maximum(excess.max(axis=1), 0.0)

    def contains(self, z, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return bool(self.violation(as_point(z))[0] <= tol)

    def coarsened(self, stride: int = 2) -> "AttractiveApprox":
        """The approximation built from every `stride`-th halfspace."""
        return AttractiveApprox(self.normals[::stride], self.offsets[::stride],
                                self.sample_points[::stride], self.mapping_label,
                                self.tol, self.whole_space, self.projection_tol)

    def to_table(self) -> str:
        buf = io.StringIO()
        buf.write(f"# attractive-set outer approximation for {self.mapping_label}\n")
        buf.write(f"# dim={self.dim} halfspaces={len(self.offsets)} tol={self.tol!r}"
                  f" whole_space={int(self.whole_space)}\n")
        buf.write("# columns: normal_1 .. normal_d offset ; set is {z : <normal, z> <= offset}\n")
        for a, b in zip(self.normals, self.offsets):
            buf.write(" ".join(f"{v:.17g}" for v in (*a, b)) + "\n")
        return buf.getvalue()

    @classmethod
    def from_table(cls, text: str, mapping_label: str = "table") -> "AttractiveApprox":
        meta, rows = {}, []
        for line in text.splitlines():
            line = line.strip()
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
            elif line:
                rows.append([float(v) for v in line.split()])
        dim = int(meta["dim"])
        data = np.array(rows, dtype=float).reshape(-1, dim + 1)
        return cls(data[:, :dim], data[:, dim], np.empty((0, dim)), mapping_label,
                   float(meta.get("tol", RESIDUAL_TOL)), bool(int(meta.get("whole_space", 0))))


def build_attractive_approx(T: Mapping, samples, tol: float = RESIDUAL_TOL,
                            projection_tol: float = PROJECTION_TOL) -> AttractiveApprox:
    """Intersect the bisector halfspaces of all non-fixed samples.

    If every sample is fixed the result is flagged `whole_space`.
    """
    pts = np.array([as_point(s) for s in samples])
    if not len(pts):
        raise ValueError("need at least one sample")
    normals, offsets, used = [], [], []
    for x in pts:
        h = attractive_halfspace(T, x, tol)
        if h.is_whole_space:
            continue
        normals.append(h.normal)
        offsets.append(h.offset)
        used.append(x)
    d = pts.shape[1]
    return AttractiveApprox(np.array(normals).reshape(-1, d), np.array(offsets),
                            np.array(used).reshape(-1, d), T.label, tol,
                            whole_space=not normals, projection_tol=projection_tol)


def default_approx(T: Mapping, grid_size: int = 64, random_count: int = 64, seed: int = 0,
                   tol: float = RESIDUAL_TOL) -> AttractiveApprox:
    return build_attractive_approx(T, sample_schedule(T.domain, grid_size, random_count, seed), tol)


def project_attractive(approx: AttractiveApprox, x) -> ProjectionResult:
    x = as_point(x)
    if approx.whole_space:
        return ProjectionResult(x, True, 0, 0.0)
    return project_halfspaces(approx.normals, approx.offsets, x, tol=approx.projection_tol)


@dataclass(frozen=True)
class FixedSetApprox:
    points: np.ndarray
    tol: float

    def __len__(self):
        return len(self.points)

    def nearest(self, x) -> np.ndarray:
        if not len(self.points):
            raise ValueError("empty fixed set")
        x = as_point(x)
        return self.points[int(np.argmin(np.linalg.norm(self.points - x, axis=1)))]


def find_fixed_points(T: Mapping, grid, tol: float = RESIDUAL_TOL,
                      search_tol: float | None = None, steps: int = 100,
                      merge_radius: float = 1e-6) -> FixedSetApprox:
    """Grid points with |Tx - x| <= search_tol, polished by x <- (x + Tx)/2.

    Only polished points meeting `tol` are kept; near-duplicates within
    `merge_radius` are merged.
    """
    search_tol = tol if search_tol is None else search_tol
    found: list[np.ndarray] = []
    for g in grid:
        x = as_point(g)
        if np.linalg.norm(T(x) - x) > search_tol:
            continue
        for _ in range(steps):
            tx = T(x)
            if np.linalg.norm(tx - x) <= 1e-3 * tol:
                break
            x = 0.5 * (x + tx)
        if not is_fixed_point(T, x, tol):
            continue
        if not found or np.linalg.norm(np.asarray(found) - x, axis=1).min() > merge_radius:
            found.append(x)
    return FixedSetApprox(np.array(found).reshape(-1, T.dim), tol)


def check_projection_identity(T: Mapping, approx: AttractiveApprox, fixed: FixedSetApprox,
                              x, tol: float = RESIDUAL_TOL, verified: bool = False) -> float:
    """Gap between the nearest fixed point and the projection onto A(T).

    For a quasinonexpansive T on a closed convex C the two coincide at
    every x in C, so the gap measures approximation error only. The
    quasinonexpansive hypothesis is checked on the approximation's samples
    unless the caller already did so (``verified=True``).
    """
    if not len(fixed):
        raise PreconditionError("fixed-point set is empty")
    x = as_point(x)
    if not T.domain.contains(x):
        raise PreconditionError(f"{x} is not in the domain of {T.label}")
    qne = None if verified else quasinonexpansive_residual(T, fixed.points, approx.sample_points, tol)
    if qne is not None and not qne.passed:
        raise PreconditionError(f"{T.label} is not quasinonexpansive on the sample: {qne}")
    return float(np.linalg.norm(fixed.nearest(x) - project_attractive(approx, x).point))


def check_projected_attractive_fixed(T: Mapping, C: ConvexSet, z, tol: float = RESIDUAL_TOL,
                                     samples=None) -> bool:
    """Is P_C(z) a fixed point of T, for an attractive point z?

    `z` is first checked against the attractive inequality on `samples`
    (the default schedule of T's domain when omitted) together with
    P_C(z) itself, which is a point of C.
    """
    z = as_point(z)
    if samples is None:
        samples = sample_schedule(T.domain)
    pz = project(C, z).point
    report = attractive_residual(T, z, np.vstack([np.atleast_2d(samples), pz]), tol)
    if not report.passed:
        raise PreconditionError(f"{z} is not attractive on the sample: {report}")
    return is_fixed_point(T, project(C, z).point, tol)
