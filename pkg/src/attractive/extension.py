"""
Quasinonexpansive extension of a mapping with an attractive point.

Given T: C -> R^d, the extension agrees with T on

    D = (C minus F(T))  union  (F(T) intersect A(T))

and with the projection onto A(T) everywhere else (outside C, and at
fixed points of T that are not attractive). Its fixed-point set is A(T)
and it moves no point away from any attractive point.

Set membership is decided numerically, so points whose fixed-point
residual or approximation slack falls in (tol, 10 tol] are treated as
boundary-ambiguous and left out of pass/fail accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attractive_set import AttractiveApprox, FixedSetApprox, project_attractive
from .hilbert import as_point
from .mappings import RESIDUAL_TOL, Mapping, ResidualReport, _points

AMBIGUITY_FACTOR = 10.0


class ExtensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ExtendedMapping:
    base: Mapping
    approx: AttractiveApprox
    fixed: FixedSetApprox
    tol: float = RESIDUAL_TOL

    @property
    def dim(self) -> int:
        return self.base.dim

    def in_d(self, x) -> bool:
        """Membership of x in the set where the extension follows T."""
        x = as_point(x)
        if not self.base.domain.contains(x):
            return False
        if not len(self.fixed):
            return True
        is_fixed = np.linalg.norm(self.base(x) - x) <= self.tol
        return (not is_fixed) or self.approx.contains(x)

    def __call__(self, x) -> np.ndarray:
        x = as_point(x)
        if self.in_d(x):
            return self.base(x)
        return project_attractive(self.approx, x).point

    def is_ambiguous(self, x) -> bool:
        x = as_point(x)
        lo, hi = self.tol, AMBIGUITY_FACTOR * self.tol
        band = [float(self.approx.violation(x)[0])]
        if self.base.domain.contains(x):
            band.append(float(np.linalg.norm(self.base(x) - x)))
        return any(lo < v <= hi for v in band)


def extend(T: Mapping, approx: AttractiveApprox, fixed: FixedSetApprox,
           tol: float = RESIDUAL_TOL) -> ExtendedMapping:
    if approx.whole_space:
        raise ExtensionError("approximation is the whole space; no attractive structure to extend with")
    if approx.dim != T.dim:
        raise ExtensionError("approximation and mapping dimensions differ")
    return ExtendedMapping(T, approx, fixed, tol)


def verify_extension_fixed_set(ext: ExtendedMapping, grid, tol: float | None = None) -> ResidualReport:
    """Check, point by point, that ext(g) = g exactly when g lies in the approximation.

    A mismatch contributes either the displacement |ext(g) - g| (member
    that moves) or the distance to the approximation (non-member that is
    fixed). Agreement contributes 0.
    """
    tol = ext.tol if tol is None else tol
    vals, wit, ambiguous = [], [], 0
    for g in _points(grid):
        if ext.is_ambiguous(g):
            ambiguous += 1
            continue
        moved = float(np.linalg.norm(ext(g) - g))
        outside = float(ext.approx.violation(g)[0])
        member, fixed = outside <= ext.approx.tol, moved <= tol
        if member and not fixed:
            vals.append(moved)
        elif fixed and not member:
            vals.append(outside)
        else:
            vals.append(0.0)
        wit.append((g,))
    if not vals:
        return ResidualReport(0.0, (), 0, tol, ambiguous)
    values = np.asarray(vals)
    k = int(np.argmax(values))
    return ResidualReport(float(values[k]), wit[k], len(values), tol, ambiguous)


def verify_extension_quasinonexpansive(ext: ExtendedMapping, members, probes,
                                       tol: float | None = None) -> ResidualReport:
    """max over (probe, member) of |ext(p) - z| - |p - z|."""
    tol = ext.tol if tol is None else tol
    zs = _points(members)
    for z in zs:
        if not ext.approx.contains(z):
            raise ValueError(f"{z} is not a member of the approximation")
    vals, wit = [], []
    for p in _points(probes):
        ep = ext(p)
        for z in zs:
            vals.append(np.linalg.norm(ep - z) - np.linalg.norm(p - z))
            wit.append((p, z))
    values = np.asarray(vals)
    k = int(np.argmax(values))
    return ResidualReport(float(values[k]), wit[k], len(values), tol)
