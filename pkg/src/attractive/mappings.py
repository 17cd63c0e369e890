"""
Mappings T: C -> R^d, a catalog of example maps and residual checkers.

Every residual checker returns a :class:`ResidualReport` carrying the
largest violation found and the input that produced it. A pass only
certifies the inequality on the supplied sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .hilbert import (Ball, Box, ConvexSet, WholeSpace, as_point, project,
                      _check_dim)

RESIDUAL_TOL = 1e-9
OPEN_EPS = 1e-6
REFINE_LEVELS = 52


class DomainError(ValueError):
    """A point lies outside the domain of a mapping."""


class PreconditionError(ValueError):
    """A check was asked to run where its hypothesis does not hold."""


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Domain:
    """Domain C of a mapping together with a finite probe box for sampling.

    `closure` is a closed convex set (a Box or WholeSpace). With
    ``open=True`` the finite faces of the box are excluded, and samplers
    keep at least `eps` away from them.
    """

    closure: ConvexSet
    probe_lower: np.ndarray
    probe_upper: np.ndarray
    open: bool = False
    eps: float = OPEN_EPS

    def __post_init__(self):
        lo = np.array(self.probe_lower, dtype=float, ndmin=1)
        hi = np.array(self.probe_upper, dtype=float, ndmin=1)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("probe box must be finite")
        if self.open and not isinstance(self.closure, Box):
            raise ValueError("only box domains can be open")
        if isinstance(self.closure, Box):
            # keep the probe box inside the domain
            lo = np.maximum(lo, self.closure.lower)
            hi = np.minimum(hi, self.closure.upper)
            if self.open:
                lo = np.where(np.isfinite(self.closure.lower) & (lo < self.closure.lower + self.eps),
                              self.closure.lower + self.eps, lo)
                hi = np.where(np.isfinite(self.closure.upper) & (hi > self.closure.upper - self.eps),
                              self.closure.upper - self.eps, hi)
        object.__setattr__(self, "probe_lower", lo)
        object.__setattr__(self, "probe_upper", hi)

    @property
    def dim(self) -> int:
        return self.closure.dim

    def contains(self, x, closure: bool = False) -> bool:
        x = as_point(x)
        _check_dim(x, self.dim)
        if not self.closure.contains(x):
            return False
        if self.open and not closure:
            box = self.closure
            return bool(np.all(x > box.lower) and np.all(x < box.upper))
        return True

    def grid(self, n: int) -> np.ndarray:
        """About `n` points on a regular grid over the probe box."""
        per_axis = max(2, math.ceil(n ** (1.0 / self.dim) - 1e-9))
        axes = [np.linspace(l, h, per_axis) for l, h in zip(self.probe_lower, self.probe_upper)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return pts[[self.contains(p) for p in pts]]

    def random(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.probe_lower, self.probe_upper, size=(n, self.dim))

    def boundary_refinement(self, levels: int = REFINE_LEVELS) -> np.ndarray:
        """Points approaching each finite face geometrically.

        Along a coordinate with a finite bound the offsets from the face are
        span * 2**-k for k = 1..levels (never closer than `eps` on open
        faces); the other coordinates sit at the centre of the probe box.
        """
        if not isinstance(self.closure, Box):
            return np.empty((0, self.dim))
        mid = 0.5 * (self.probe_lower + self.probe_upper)
        span = self.probe_upper - self.probe_lower
        out = []
        for i in range(self.dim):
            if span[i] <= 0:
                continue
            for bound, sign in ((self.closure.lower[i], 1.0), (self.closure.upper[i], -1.0)):
                if not np.isfinite(bound):
                    continue
                offsets = span[i] * 0.5 ** np.arange(1, levels + 1)
                if self.open:
                    offsets = np.append(offsets[offsets > self.eps], self.eps)
                for off in offsets:
                    p = mid.copy()
                    p[i] = bound + sign * off
                    out.append(p)
        return np.array(out).reshape(-1, self.dim)


def box_domain(lower, upper, open: bool = False, probe=None) -> Domain:
    box = Box(lower, upper)
    if probe is None:
        probe = (box.lower, box.upper)
    return Domain(box, probe[0], probe[1], open=open)


def sample_schedule(domain: Domain, grid_size: int = 64, random_count: int = 64,
                    seed: int = 0, refine_levels: int = REFINE_LEVELS) -> np.ndarray:
    """Default sample set: grid, seeded uniform draws, boundary refinement."""
    rng = np.random.default_rng(seed)
    parts = [domain.grid(grid_size) if grid_size else np.empty((0, domain.dim)),
             domain.random(rng, random_count),
             domain.boundary_refinement(refine_levels)]
    return np.vstack(parts)


def refine_toward_images(T: "Mapping", samples, levels: int = 0, orbit_steps: int = 0) -> np.ndarray:
    """Extra samples near where T moves points only slightly.

    For each sample x adds Tx + 2**-k (x - Tx), k = 1..levels (tightens the
    approximation when A(T) is the image of T, as for projections), and
    the orbit T^j x, j = 1..orbit_steps (tightens it for contractions).
    Points outside the domain are skipped.
    """
    base = np.atleast_2d(np.asarray(samples, dtype=float))
    extra = []
    for x in base:
        tx = T(x)
        for k in range(1, levels + 1):
            extra.append(tx + 0.5 ** k * (x - tx))
        y = x
        for _ in range(orbit_steps):
            y = T(y)
            extra.append(y)
    extra = [p for p in extra if T.domain.contains(p)]
    return np.vstack([base, np.array(extra).reshape(-1, base.shape[1])])


# ---------------------------------------------------------------------------
# Mappings
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mapping:
    """A deterministic map `func` restricted to `domain`.

    `lam` is the declared lambda for which the map is expected to be
    lambda-hybrid, or None when no claim is made.
    """

    label: str
    func: Callable[[np.ndarray], np.ndarray]
    domain: Domain
    params: dict = field(default_factory=dict)
    lam: float | None = None

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, x, check: bool = True) -> np.ndarray:
        x = as_point(x)
        if check and not self.domain.contains(x):
            raise DomainError(f"{x} is outside the domain of {self.label}")
        y = np.asarray(self.func(x), dtype=float).reshape(x.shape)
        if not np.all(np.isfinite(y)):
            raise ValueError(f"{self.label} produced a non-finite value at {x}")
        return y

    def restrict(self, domain: Domain) -> "Mapping":
        return Mapping(self.label, self.func, domain, dict(self.params), self.lam)


def _rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def halving(probe_upper: float = 5.0) -> Mapping:
    """Tx = x/2 on the open half-line (0, inf)."""
    dom = Domain(Box([0.0], [np.inf]), [0.0], [probe_upper], open=True)
    return Mapping("halving", lambda x: 0.5 * x, dom, {}, lam=1.0)


def rotation(theta: float = math.pi / 3, center=(0.0, 0.0), probe_radius: float = 2.0) -> Mapping:
    c = as_point(center)
    R = _rotation_matrix(theta)
    dom = Domain(WholeSpace(2), c - probe_radius, c + probe_radius)
    return Mapping("rotation", lambda x: c + R @ (x - c), dom,
                   {"theta": float(theta), "center": c}, lam=1.0)


def square(upper: float = 1.0) -> Mapping:
    """Tx = x**2 on [0, upper], upper <= 1 so the map is a self-map."""
    if not 0.0 < upper <= 1.0:
        raise ValueError("square map needs 0 < upper <= 1")
    return Mapping("square", lambda x: x * x, box_domain([0.0], [upper]), {"upper": float(upper)})


def projection(target: ConvexSet | None = None, probe_radius: float = 3.0) -> Mapping:
    """T = P_S on the whole space; defaults to the unit ball in R^2.

    Metric projections are firmly nonexpansive, hence 0-hybrid
    (nonspreading); they are not 2-hybrid in general.
    """
    if target is None:
        target = Ball(np.zeros(2), 1.0)
    d = target.dim
    dom = Domain(WholeSpace(d), np.full(d, -probe_radius), np.full(d, probe_radius))
    params = {}
    if isinstance(target, Ball):
        params = {"center": target.center, "radius": target.radius}
    return Mapping("projection", lambda x: project(target, x).point, dom, params, lam=0.0)


def affine_contraction(center=(0.0, 0.0), rho: float = 0.5, theta: float = 0.0,
                       probe_radius: float = 2.0) -> Mapping:
    """Tx = c + rho * R(theta)(x - c) on R^2."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    c = as_point(center)
    M = rho * _rotation_matrix(theta)
    dom = Domain(WholeSpace(2), c - probe_radius, c + probe_radius)
    return Mapping("affine-contraction", lambda x: c + M @ (x - c), dom,
                   {"center": c, "rho": float(rho), "theta": float(theta)}, lam=1.0)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    factory: Callable[..., Mapping]
    params: dict
    fixed_set: str
    attractive_set: str
    summary: str


CATALOG = {
    e.id: e
    for e in [
        CatalogEntry("halving", halving, {"probe_upper": 5.0},
                     "empty (0 is excluded from C)", "(-inf, 0]", "Tx = x/2 on C = (0, inf)"),
        CatalogEntry("rotation", rotation, {"theta": math.pi / 3, "center": (0.0, 0.0)},
                     "{center}", "{center}", "rotation by theta about center on C = R^2"),
        CatalogEntry("square", square, {"upper": 1.0},
                     "{0, 1} (for upper = 1)", "(-inf, 0]", "Tx = x^2 on C = [0, upper]"),
        CatalogEntry("projection", lambda center=(0.0, 0.0), radius=1.0, **kw:
                     projection(Ball(center, radius), **kw),
                     {"center": (0.0, 0.0), "radius": 1.0},
                     "ball(center, radius)", "ball(center, radius)",
                     "metric projection onto a ball, C = R^d"),
        CatalogEntry("affine-contraction", affine_contraction,
                     {"center": (0.0, 0.0), "rho": 0.5, "theta": 0.0},
                     "{center}", "{center}", "Tx = c + rho R(theta)(x - c) on C = R^2"),
    ]
}


def make_mapping(id: str, **params) -> Mapping:
    try:
        entry = CATALOG[id]
    except KeyError:
        raise KeyError(f"unknown mapping id {id!r}; known: {', '.join(CATALOG)}") from None
    unknown = set(params) - set(entry.params) - {"probe_radius", "probe_upper"}
    if unknown:
        raise ValueError(f"unknown parameters for {id}: {sorted(unknown)}")
    return entry.factory(**params)


# ---------------------------------------------------------------------------
# Residual checkers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    max_violation: float
    argmax_witness: tuple
    samples_checked: int
    tol: float
    ambiguous: int = 0
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def __str__(self):
        status = "passed" if self.passed else "FAILED"
        witness = ", ".join(np.array2string(np.asarray(w), precision=17) for w in self.argmax_witness)
        extra = f", {self.ambiguous} boundary-ambiguous excluded" if self.ambiguous else ""
        seed = f", seed={self.seed}" if self.seed is not None else ""
        return (f"{status}: max_violation={self.max_violation:.17g} (tol {self.tol:g}) "
                f"over {self.samples_checked} samples{extra}{seed}; witness ({witness})")


def _reduce(values: Sequence[float], witnesses: Sequence[tuple], tol: float, **kw) -> ResidualReport:
    values = np.asarray(values, dtype=float)
    k = int(np.argmax(values))  # first maximum in canonical order
    return ResidualReport(float(values[k]), witnesses[k], len(values), tol, **kw)


def _points(samples) -> list[np.ndarray]:
    pts = [as_point(s) for s in samples]
    if not pts:
        raise ValueError("empty sample list")
    return pts


def is_fixed_point(T: Mapping, x, tol: float = RESIDUAL_TOL) -> bool:
    x = as_point(x)
    return float(np.linalg.norm(T(x) - x)) <= tol


def attractive_residual(T: Mapping, z, samples, tol: float = RESIDUAL_TOL) -> ResidualReport:
    """max over samples x of |Tx - z| - |x - z|."""
    z = as_point(z)
    xs = _points(samples)
    vals = [np.linalg.norm(T(x) - z) - np.linalg.norm(x - z) for x in xs]
    return _reduce(vals, [(x,) for x in xs], tol)


def quasinonexpansive_residual(T: Mapping, f_points, samples,
                               tol: float = RESIDUAL_TOL, chunk: int = 512) -> ResidualReport:
    """max over (x, z) of |Tx - z| - |x - z| with z ranging over `f_points`."""
    fs = np.array(_points(f_points))
    xs = np.array(_points(samples))
    txs = np.array([T(x) for x in xs])
    best, where = -np.inf, (0, 0)
    for start in range(0, len(xs), chunk):
        diff = cdist(txs[start:start + chunk], fs) - cdist(xs[start:start + chunk], fs)
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        if diff[i, j] > best:  # strict, so the first maximum in x-major order wins
            best, where = float(diff[i, j]), (start + i, j)
    return ResidualReport(best, (xs[where[0]], fs[where[1]]), len(xs) * len(fs), tol)


def _pairs(pairs):
    out = [(as_point(x), as_point(y)) for x, y in pairs]
    if not out:
        raise ValueError("empty pair list")
    return out


def lambda_hybrid_residual(T: Mapping, lam: float, pairs,
                           tol: float = RESIDUAL_TOL) -> ResidualReport:
    """max of |Tx-Ty|^2 - |x-y|^2 - 2(1-lam)<x-Tx, y-Ty> over pairs."""
    ps = _pairs(pairs)
    vals = []
    for x, y in ps:
        tx, ty = T(x), T(y)
        vals.append(np.sum((tx - ty) ** 2) - np.sum((x - y) ** 2)
                    - 2 * (1 - lam) * float((x - tx) @ (y - ty)))
    return _reduce(vals, ps, tol)


def lambda_hybrid_equiv_residual(T: Mapping, lam: float, pairs,
                                 tol: float = RESIDUAL_TOL) -> ResidualReport:
    """Same inequality, written around Ty:

    |Tx-Ty|^2 <= |x-Ty|^2 + |Ty-y|^2 + 2<lam x + (1-lam)Tx - Ty, Ty - y>
    """
    ps = _pairs(pairs)
    vals = []
    for x, y in ps:
        tx, ty = T(x), T(y)
        vals.append(np.sum((tx - ty) ** 2) - np.sum((x - ty) ** 2) - np.sum((ty - y) ** 2)
                    - 2 * float((lam * x + (1 - lam) * tx - ty) @ (ty - y)))
    return _reduce(vals, ps, tol)


def random_pairs(T: Mapping, n: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    rng = np.random.default_rng(seed)
    a = T.domain.random(rng, n)
    b = T.domain.random(rng, n)
    return list(zip(a, b))
