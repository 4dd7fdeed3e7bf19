"""Differential inequalities characterizing strong pseudoconvexity.

For a positive profile ``theta`` of the squared radius ``s = |x|^2`` the
domain ``D_- = {|y|^2 < theta(|x|^2)}`` is strongly pseudoconvex along
``Sigma = {|y|^2 = theta}`` iff

    theta' < 1   and   2 s theta theta'' < (1 - theta')(s theta'^2 + theta),

and ``D_+`` is strongly pseudoconvex iff the reversed inequalities hold.  In
the radius variable ``t = |x|`` with ``f(t)^2 = theta(t^2)`` the same
dichotomy reads

    f (f'' + f'^3/t) < 1   and   f f'/t < 1          (D_- side)
    f (f'' + f'^3/t) > 1   and   f f'/t > 1          (D_+ side)

and equality in the curvature condition is the degenerate (weakly
pseudoconvex) ODE case.

Strictness and equality bands: "strict" means a signed margin above
``1e-12 * scale`` with ``scale = max(1, |lhs|, |rhs|)``; a margin within
``1e-8 * scale`` of zero is reported as Equality.  At second-derivative
breakpoints every check is performed for both one-sided limits and passes
only if both pass.  Grid policy for sweeps: uniform points, plus all profile
breakpoints, plus 10 log-spaced points hugging each interval endpoint
(the constructions have boundary layers near ``sigma``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import NotInvertible, NotPositive, OutOfDomain
from . import levi
from .profiles import ProfileLike, theta_of_f
from .runtime import thread_cap

__all__ = [
    "Condition",
    "Verdict",
    "InequalityRecord",
    "SideReport",
    "ConditionReport",
    "SweepReport",
    "Classification",
    "theta_condition",
    "f_condition",
    "cap_condition",
    "sweep",
    "classify",
    "duality_check",
    "levi_dichotomy_check",
    "margin_trace_csv",
    "build_grid",
]

STRICT_FLOOR_RTOL = 1e-12
EQ_BAND_RTOL = 1e-8


class Condition(str, enum.Enum):
    """Which inequality system a sweep certifies."""

    INEQ2 = "2"     # theta-form pair, D_- direction
    INEQ6 = "6"     # f-form pair, D_- direction (same system as 8)
    INEQ8 = "8"     # f-form pair, D_- direction
    INEQ9 = "9"     # f-form pair, D_+ direction
    CAP = "cap"     # quadratic-model cap: h' < lam1 and 2t h'' + h' < lam1


class Verdict(str, enum.Enum):
    STRICT_HOLDS = "StrictHolds"
    REVERSE_HOLDS = "ReverseHolds"
    EQUALITY = "Equality"
    VIOLATED = "Violated"


def _verdict(margin: float, scale: float) -> Verdict:
    if not math.isfinite(margin):
        if math.isinf(margin):
            return Verdict.STRICT_HOLDS if margin > 0 else Verdict.REVERSE_HOLDS
        return Verdict.VIOLATED
    if abs(margin) <= EQ_BAND_RTOL * scale:
        return Verdict.EQUALITY
    return Verdict.STRICT_HOLDS if margin > 0.0 else Verdict.REVERSE_HOLDS


@dataclass(frozen=True)
class InequalityRecord:
    name: str
    lhs: float
    rhs: float

    @property
    def scale(self) -> float:
        parts = [1.0]
        if math.isfinite(self.lhs):
            parts.append(abs(self.lhs))
        if math.isfinite(self.rhs):
            parts.append(abs(self.rhs))
        return max(parts)

    @property
    def margin(self) -> float:
        """Signed margin ``rhs - lhs``; positive iff the strict form holds."""
        if self.lhs == self.rhs:
            return 0.0
        return self.rhs - self.lhs

    @property
    def verdict(self) -> Verdict:
        return _verdict(self.margin, self.scale)

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "verdict": self.verdict.value}


@dataclass(frozen=True)
class SideReport:
    side: str
    records: tuple[InequalityRecord, ...]
    residual: float

    @property
    def margin_minus(self) -> float:
        return min(r.margin for r in self.records)

    @property
    def margin_plus(self) -> float:
        return min(-r.margin for r in self.records)

    def as_dict(self) -> dict:
        return {"side": self.side, "residual": self.residual,
                "records": [r.as_dict() for r in self.records]}


@dataclass(frozen=True)
class ConditionReport:
    """Evaluated inequality system at one point (both sides at breakpoints)."""

    point: float
    form: str
    sides: tuple[SideReport, ...]

    @property
    def margin_minus(self) -> float:
        return min(s.margin_minus for s in self.sides)

    @property
    def margin_plus(self) -> float:
        return min(s.margin_plus for s in self.sides)

    @property
    def residual(self) -> float:
        return max((s.residual for s in self.sides), key=abs)

    def as_dict(self) -> dict:
        return {"point": self.point, "form": self.form,
                "sides": [s.as_dict() for s in self.sides]}


def _sides_at(p: ProfileLike, t: float) -> tuple[str, ...]:
    return ("left", "right") if t in p.breakpoints() else ("auto",)


def theta_condition(theta: ProfileLike, s: float) -> ConditionReport:
    """Report the theta-form pair and the degenerate-ODE residual at ``s``."""
    if s < 0.0:
        raise OutOfDomain("s must be nonnegative")
    sides = []
    for side in _sides_at(theta, s):
        th = theta.value_at(s, side)
        if th <= 0.0:
            raise NotPositive(f"theta({s!r}) = {th!r} <= 0")
        d1 = theta.d1_at(s, side)
        d2 = theta.d2_at(s, side)
        lhs2 = 2.0 * s * th * d2
        rhs2 = (1.0 - d1) * (s * d1 * d1 + th)
        recs = (InequalityRecord("theta_prime_lt_1", d1, 1.0),
                InequalityRecord("theta_curvature", lhs2, rhs2))
        sides.append(SideReport(side, recs, lhs2 - rhs2))
    return ConditionReport(s, "theta", tuple(sides))


def f_condition(f: ProfileLike, t: float) -> ConditionReport:
    """Report the f-form pair and the degenerate-ODE residual at ``t > 0``."""
    if t <= 0.0:
        raise OutOfDomain("the f-form divides by t; use the theta-form at t=0")
    sides = []
    for side in _sides_at(f, t):
        v = f.value_at(t, side)
        if v <= 0.0:
            raise NotPositive(f"f({t!r}) = {v!r} <= 0")
        d1 = f.d1_at(t, side)
        d2 = f.d2_at(t, side)
        lhs1 = v * (d2 + d1 ** 3 / t)
        lhs2 = v * d1 / t
        recs = (InequalityRecord("f_curvature", lhs1, 1.0),
                InequalityRecord("f_slope", lhs2, 1.0))
        sides.append(SideReport(side, recs, lhs1 - 1.0))
    return ConditionReport(t, "f", tuple(sides))


def cap_condition(h: ProfileLike, t: float, lam1: float) -> ConditionReport:
    """Cap conditions ``h' < lam1`` and ``2 t h'' + h' < lam1`` at ``t``."""
    sides = []
    for side in _sides_at(h, t):
        d1 = h.d1_at(t, side)
        d2 = h.d2_at(t, side)
        trace = 2.0 * t * d2 + d1
        recs = (InequalityRecord("hdot_lt_lam1", d1, lam1),
                InequalityRecord("cap_trace", trace, lam1))
        sides.append(SideReport(side, recs, trace - lam1))
    return ConditionReport(t, "cap", tuple(sides))


# ---------------------------------------------------------------------------
# grid sweeps
# ---------------------------------------------------------------------------


def build_grid(p: ProfileLike, interval: tuple[float, float] | None,
               n_grid: int) -> list[float]:
    """Sweep grid: uniform + breakpoints + 10 log-spaced points per endpoint."""
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    if interval is None:
        lo, hi = p.domain_lo, p.domain_hi
        if math.isinf(hi):
            anchor = max([1.0] + [abs(b) for b in p.breakpoints()])
            hi = max(4.0 * anchor, lo + 1.0)
    else:
        lo, hi = interval
        if math.isinf(hi):
            raise ValueError("sweep interval must be finite")
    if not (hi > lo):
        raise ValueError(f"empty sweep interval [{lo!r}, {hi!r}]")
    pts = set(np.linspace(lo, hi, n_grid).tolist())
    gap = hi - lo
    for j in range(1, 11):
        pts.add(lo + gap * 10.0 ** (-j))
        pts.add(hi - gap * 10.0 ** (-j))
    for b in p.breakpoints():
        if lo <= b <= hi:
            pts.add(float(b))
    return sorted(t for t in pts if lo <= t <= hi)


@dataclass
class SweepReport:
    condition: Condition
    points: list[ConditionReport]
    skipped: list[float] = field(default_factory=list)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def _min_over(self, attr: str) -> tuple[float, float]:
        best, where = math.inf, math.nan
        for rep in self.points:
            m = getattr(rep, attr)
            if m < best:
                best, where = m, rep.point
        return best, where

    @property
    def min_margin_minus(self) -> float:
        return self._min_over("margin_minus")[0]

    @property
    def min_margin_plus(self) -> float:
        return self._min_over("margin_plus")[0]

    @property
    def argmin_minus(self) -> float:
        return self._min_over("margin_minus")[1]

    @property
    def argmin_plus(self) -> float:
        return self._min_over("margin_plus")[1]

    def passes(self, direction: str) -> bool:
        m = self.min_margin_minus if direction == "minus" else self.min_margin_plus
        return m > 0.0

    @property
    def max_abs_residual(self) -> float:
        return max(abs(rep.residual) for rep in self.points)

    def as_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "n_points": self.n_points,
            "min_margin_minus": self.min_margin_minus,
            "argmin_minus": self.argmin_minus,
            "min_margin_plus": self.min_margin_plus,
            "argmin_plus": self.argmin_plus,
            "skipped": self.skipped,
        }


def sweep(p: ProfileLike, condition: Condition,
          interval: tuple[float, float] | None = None, n_grid: int = 1000,
          lam1: float | None = None) -> SweepReport:
    """Evaluate a condition system over the grid policy.

    For the f-form conditions the point ``t = 0`` delegates to the theta-form
    at ``s = 0`` (the f-form divides by ``t``; the rotational model itself has
    no singularity on the axis).  Grid endpoints where the profile vanishes
    (flat-extended inverses anchored at 0) are skipped and recorded.
    """
    condition = Condition(condition)
    grid = build_grid(p, interval, n_grid)
    theta_view = None
    skipped: list[float] = []

    def at_point(t: float) -> ConditionReport | None:
        nonlocal theta_view
        try:
            if condition is Condition.CAP:
                if lam1 is None:
                    raise ValueError("cap condition needs lam1")
                return cap_condition(p, t, lam1)
            if condition is Condition.INEQ2:
                return theta_condition(p, t)
            if t == 0.0:
                if theta_view is None:
                    theta_view = theta_of_f(p)
                return theta_condition(theta_view, 0.0)
            return f_condition(p, t)
        except (NotPositive, OutOfDomain):
            if t in (grid[0], grid[-1]):
                skipped.append(t)
                return None
            raise

    cap = thread_cap()
    if cap > 1 and len(grid) > 64:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=cap) as pool:
            results = list(pool.map(at_point, grid))
    else:
        results = [at_point(t) for t in grid]
    reports = [r for r in results if r is not None]
    return SweepReport(condition, reports, skipped)


@dataclass(frozen=True)
class Classification:
    label: str
    min_margin: float
    location: float
    report: SweepReport

    def as_dict(self) -> dict:
        return {"label": self.label, "min_margin": self.min_margin,
                "location": self.location, **self.report.as_dict()}


def classify(p: ProfileLike, interval: tuple[float, float] | None = None,
             n_grid: int = 1000, form: str = "f") -> Classification:
    """Classify a profile as DMinusStrong / DPlusStrong / BoundaryCase / Mixed.

    A profile passes a strong classification only if BOTH one-sided reports
    pass at every breakpoint (the sweep already enforces this).
    """
    cond = Condition.INEQ2 if form == "theta" else Condition.INEQ8
    rep = sweep(p, cond, interval, n_grid)
    floor = STRICT_FLOOR_RTOL
    m_minus, at_minus = rep._min_over("margin_minus")
    m_plus, at_plus = rep._min_over("margin_plus")
    if m_minus > floor:
        return Classification("DMinusStrong", m_minus, at_minus, rep)
    if m_plus > floor:
        return Classification("DPlusStrong", m_plus, at_plus, rep)
    scales = [max(1.0, abs(r.residual)) for r in rep.points]
    if all(abs(r.residual) <= EQ_BAND_RTOL * s
           for r, s in zip(rep.points, scales)):
        worst = max(rep.points, key=lambda r: abs(r.residual))
        return Classification("BoundaryCase", worst.residual, worst.point, rep)
    return Classification("Mixed", min(m_minus, m_plus),
                          at_minus if m_minus < m_plus else at_plus, rep)


# ---------------------------------------------------------------------------
# inverse duality (profiles as graphs over |y| instead of |x|)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualityReport:
    s: float
    u: float
    mode: str                      # "increasing" or "decreasing"
    theta_report: ConditionReport
    tau_records: tuple[InequalityRecord, ...]
    consistent: bool

    def as_dict(self) -> dict:
        return {"s": self.s, "u": self.u, "mode": self.mode,
                "consistent": self.consistent,
                "theta": self.theta_report.as_dict(),
                "tau_records": [r.as_dict() for r in self.tau_records]}


def duality_check(theta: ProfileLike, s: float) -> DualityReport:
    """Check the inverse-duality of the theta-form system at ``s``.

    With ``tau`` the local inverse of ``theta`` (``tau' = 1/theta'``,
    ``tau'' = -theta''/theta'^3`` at ``u = theta(s)``): where ``theta' > 0``
    the pair holds for ``theta`` iff the reversed pair holds for ``tau``;
    where ``theta' < 0`` the pair transforms into itself.
    """
    d1 = theta.d1_at(s)
    if d1 == 0.0:
        raise NotInvertible(f"theta'({s!r}) = 0")
    u = theta.value_at(s)
    tau = s
    td1 = 1.0 / d1
    td2 = -theta.d2_at(s) / d1 ** 3
    lhs2 = 2.0 * u * tau * td2
    rhs2 = (1.0 - td1) * (u * td1 * td1 + tau)
    tau_records = (InequalityRecord("tau_prime_lt_1", td1, 1.0),
                   InequalityRecord("tau_curvature", lhs2, rhs2))
    tau_minus = min(r.margin for r in tau_records)
    tau_plus = min(-r.margin for r in tau_records)
    threp = theta_condition(theta, s)
    if d1 > 0.0:
        consistent = ((threp.margin_minus > 0.0) == (tau_plus > 0.0)
                      and (threp.margin_plus > 0.0) == (tau_minus > 0.0))
        mode = "increasing"
    else:
        consistent = ((threp.margin_minus > 0.0) == (tau_minus > 0.0)
                      and (threp.margin_plus > 0.0) == (tau_plus > 0.0))
        mode = "decreasing"
    return DualityReport(s, u, mode, threp, tau_records, consistent)


# ---------------------------------------------------------------------------
# Levi-form cross checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DichotomyRow:
    s: float
    verdict_strict: bool
    verdict_reverse: bool
    min_eig: float
    max_eig: float
    agree: bool


def levi_dichotomy_check(theta: ProfileLike, s_values: Iterable[float], n: int,
                         samples_per_radius: int,
                         rng: np.random.Generator) -> list[DichotomyRow]:
    """Cross-check inequality verdicts against restricted Levi spectra.

    For each radius: strict theta-pair  <=>  every sampled restricted
    eigenvalue positive; reversed pair  <=>  every one negative.
    """
    if n < 2:
        raise OutOfDomain("rotational model needs n > 1")
    rows = []
    for s in s_values:
        rep = theta_condition(theta, float(s))
        strict = rep.margin_minus > STRICT_FLOOR_RTOL
        reverse = rep.margin_plus > STRICT_FLOOR_RTOL
        min_eig, max_eig = math.inf, -math.inf
        for p in levi.sample_hypersurface_points(theta, float(s), n,
                                                 samples_per_radius, rng):
            H = levi.rotational_hessian(theta, p)
            frame = levi.tangent_frame(levi.rotational_gradient(theta, p))
            spec = levi.restricted_levi_spectrum(H, frame)
            min_eig = min(min_eig, float(spec[0]))
            max_eig = max(max_eig, float(spec[-1]))
        agree = True
        if strict and min_eig <= 0.0:
            agree = False
        if reverse and max_eig >= 0.0:
            agree = False
        if min_eig > 0.0 and not strict:
            agree = False
        if max_eig < 0.0 and not reverse:
            agree = False
        rows.append(DichotomyRow(float(s), strict, reverse, min_eig, max_eig,
                                 agree))
    return rows


def margin_trace_csv(report: SweepReport) -> str:
    """CSV margin trace ``t, margin_minus, margin_plus`` (worst side per point)."""
    lines = ["t,margin_minus,margin_plus"]
    for rep in report.points:
        lines.append(f"{rep.point!r},{rep.margin_minus!r},{rep.margin_plus!r}")
    return "\n".join(lines) + "\n"
