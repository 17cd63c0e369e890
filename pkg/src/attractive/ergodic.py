"""
Cesàro-mean iteration and convergence diagnostics.

For a start x the engine records the orbit T^n x, the running means

    z_n = (1/n) * sum_{k=1}^{n} T^{k-1} x,

and the projections of the orbit onto the attractive-set approximation.
In R^d weak and strong convergence coincide, so a "cluster point" of the
means is estimated by the last mean, accepted only when the tail of the
mean sequence is Cauchy at the O(1/n) rate.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .attractive_set import AttractiveApprox, project_attractive
from .hilbert import as_point
from .mappings import (RESIDUAL_TOL, DomainError, Mapping, PreconditionError,
                       ResidualReport, attractive_residual,
                       lambda_hybrid_residual, random_pairs)

MIN_TAIL = 50
TAIL_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class CesaroTrace:
    """Record of one run.

    Arrays are indexed by n = 0..n_max. ``means[0]`` is NaN since the
    first mean is z_1 = x; ``fejer_residuals`` has n_max entries,
    |T^{n+1}x - u| - |T^n x - u| for n = 0..n_max-1.
    """

    start: np.ndarray
    orbit: np.ndarray
    means: np.ndarray
    proj_trajectory: np.ndarray
    fejer_residuals: np.ndarray
    mean_gaps: np.ndarray
    fejer_witness: np.ndarray
    mapping_label: str
    projections_converged: bool = True

    @property
    def n_max(self) -> int:
        return len(self.orbit) - 1

    def to_csv(self) -> str:
        d = self.orbit.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", *(f"orbit_{i}" for i in range(1, d + 1)),
                    *(f"mean_{i}" for i in range(1, d + 1)),
                    *(f"proj_{i}" for i in range(1, d + 1)), "fejer_residual", "mean_gap"])
        fmt = lambda v: "" if not np.isfinite(v) else f"{v:.17g}"
        for n in range(self.n_max + 1):
            fej = self.fejer_residuals[n] if n < self.n_max else math.nan
            w.writerow([n, *map(fmt, self.orbit[n]), *map(fmt, self.means[n]),
                        *map(fmt, self.proj_trajectory[n]), fmt(fej), fmt(self.mean_gaps[n])])
        return buf.getvalue()


def iterate(T: Mapping, x, n_max: int, approx: AttractiveApprox) -> CesaroTrace:
    """Run the orbit of `x` for `n_max` steps and record means and projections.

    The orbit may approach the boundary of an open domain (e.g. the halving
    map underflows to 0), so iterates are only required to stay in the
    closure of C.
    """
    x = as_point(x)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if not T.domain.contains(x):
        raise DomainError(f"start {x} is outside the domain of {T.label}")
    d = x.size
    orbit = np.empty((n_max + 1, d))
    means = np.full((n_max + 1, d), np.nan)
    orbit[0] = x
    means[1] = x
    for n in range(1, n_max + 1):
        y = T(orbit[n - 1], check=False)
        if not T.domain.contains(y, closure=True):
            raise DomainError(f"orbit left the domain of {T.label} at step {n}: {y}")
        orbit[n] = y
        if n < n_max:
            means[n + 1] = (n / (n + 1)) * means[n] + orbit[n] / (n + 1)

    converged = True
    proj = np.empty_like(orbit)
    for n in range(n_max + 1):
        res = project_attractive(approx, orbit[n])
        proj[n] = res.point
        converged &= res.converged
    u = project_attractive(approx, np.zeros(d)).point
    fejer = fejer_residuals(orbit, u)
    gaps = np.linalg.norm(means - proj[-1], axis=1)
    return CesaroTrace(x, orbit, means, proj, fejer, gaps, u, T.label, bool(converged))


def fejer_residuals(orbit: np.ndarray, u) -> np.ndarray:
    """|T^{n+1}x - u| - |T^n x - u| for consecutive orbit points."""
    dist = np.linalg.norm(orbit - as_point(u), axis=1)
    return dist[1:] - dist[:-1]


def orbit_diameter(orbit: np.ndarray) -> float:
    pts = np.unique(orbit, axis=0)
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


def tail_start(n_max: int) -> int:
    window = max(MIN_TAIL, math.ceil(TAIL_FRACTION * n_max))
    return max(1, n_max + 1 - window)


@dataclass(frozen=True)
class ConvergenceReport:
    proj_limit: np.ndarray
    proj_cauchy_residual: float
    mean_limit: np.ndarray | None
    mean_cauchy_residual: float
    mean_matches_proj: bool
    contradiction_case: bool
    membership_violation: float
    combined_tol: float
    resolution: float
    orbit_diameter: float
    hypothesis: str
    diagnostics: list = field(default_factory=list)

    def __str__(self):
        fmt = lambda p: "NONE" if p is None else np.array2string(p, precision=17)
        lines = [
            f"proj_limit            {fmt(self.proj_limit)}",
            f"proj_cauchy_residual  {self.proj_cauchy_residual:.17g}",
            f"mean_limit            {fmt(self.mean_limit)}",
            f"mean_cauchy_residual  {self.mean_cauchy_residual:.17g}",
            f"membership_violation  {self.membership_violation:.17g}",
            f"combined_tol          {self.combined_tol:.17g}",
            f"  resolution          {self.resolution:.17g}",
            f"  orbit_diameter      {self.orbit_diameter:.17g}",
            f"cluster hypothesis    {self.hypothesis}",
            f"mean_matches_proj     {self.mean_matches_proj}",
            f"contradiction_case    {self.contradiction_case}",
        ]
        lines += [f"note: {d}" for d in self.diagnostics]
        return "\n".join(lines)


def analyze(trace: CesaroTrace, approx: AttractiveApprox, tol: float = RESIDUAL_TOL) -> ConvergenceReport:
    """Estimate the limits of the projection trajectory and of the means.

    Tolerances: combined = tol + 2 * diam(orbit) / n_max + resolution,
    where resolution is how far the projection of the last iterate moves
    when the approximation is coarsened to every other halfspace.
    """
    N = trace.n_max
    if N < MIN_TAIL:
        raise ValueError(f"trace too short for tail estimation ({N} < {MIN_TAIL} steps)")
    t0 = tail_start(N)
    notes = [f"tail window n = {t0}..{N}"]

    proj_tail = trace.proj_trajectory[t0:]
    proj_limit = proj_tail.mean(axis=0)
    proj_cauchy = float(pdist(np.unique(proj_tail, axis=0)).max()) if len(np.unique(proj_tail, axis=0)) > 1 else 0.0

    diam = orbit_diameter(trace.orbit)
    q = trace.orbit[-1]
    resolution = float(np.linalg.norm(project_attractive(approx, q).point
                                      - project_attractive(approx.coarsened(), q).point))
    combined = tol + 2.0 * diam / N + resolution

    mean_tail = trace.means[t0:]
    mean_cauchy = float(np.linalg.norm(mean_tail - trace.means[-1], axis=1).max())
    # O(1/n) envelope of a convergent Cesàro mean over the tail window
    cauchy_bound = 2.0 * combined * N / t0
    mean_limit = trace.means[-1].copy() if mean_cauchy <= cauchy_bound else None
    if mean_limit is None:
        notes.append(f"means not Cauchy on the tail ({mean_cauchy:.3g} > {cauchy_bound:.3g}); no cluster point reported")
    if proj_cauchy > combined:
        notes.append(f"projection trajectory not settled ({proj_cauchy:.3g} > {combined:.3g})")
    if not trace.projections_converged:
        notes.append("some projections did not converge")

    if mean_limit is None:
        violation, hypothesis = math.nan, "undecided (no cluster point)"
        matches = contradiction = False
    else:
        violation = float(approx.violation(mean_limit)[0])
        contradiction = violation > combined
        hypothesis = "failed on trace" if contradiction else "verified on trace"
        matches = (not contradiction) and float(np.linalg.norm(mean_limit - proj_limit)) <= combined
        if contradiction:
            notes.append("means converge to a point outside the attractive-set approximation:"
                         " start is a fixed point that is not attractive")
    return ConvergenceReport(proj_limit, proj_cauchy, mean_limit, mean_cauchy, matches,
                             contradiction, violation, combined, resolution, diam, hypothesis, notes)


def cluster_attractiveness(trace: CesaroTrace, T: Mapping, samples, tol: float = RESIDUAL_TOL,
                           lam: float | None = None, n_pairs: int = 200, seed: int = 0) -> ResidualReport:
    """Test the estimated cluster point of the means against the attractive inequality.

    Preconditions, both checked: T satisfies the lambda-hybrid inequality on
    `n_pairs` seeded pairs, and the orbit is bounded (Fejér monotone with
    respect to the trace's reference point or to the projection of the
    last iterate, both approximation members). The pass threshold widens tol
    by twice the truncation error 2 diam / n_max, since the residual is
    2-Lipschitz in the candidate point.
    """
    lam = T.lam if lam is None else lam
    if lam is None:
        raise PreconditionError(f"{T.label} declares no lambda")
    hybrid = lambda_hybrid_residual(T, lam, random_pairs(T, n_pairs, seed), tol)
    if not hybrid.passed:
        raise PreconditionError(f"{T.label} is not {lam}-hybrid on the sample: {hybrid}")
    if not np.all(np.isfinite(trace.orbit)) or not any(
            fejer_residuals(trace.orbit, u).max() <= tol
            for u in (trace.fejer_witness, trace.proj_trajectory[-1])):
        raise PreconditionError("orbit is not bounded by Fejér monotonicity")
    truncation = 2.0 * orbit_diameter(trace.orbit) / trace.n_max
    return attractive_residual(T, trace.means[-1], samples, tol + 2.0 * truncation)
