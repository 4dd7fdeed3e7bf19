"""Mollification of piecewise-C^2 profiles into C^2 profiles.

A profile that is C^1 with second-derivative jumps (or merely C^0 with slope
kinks, e.g. ``|t|``) is replaced on small windows ``(b - radius, b + radius)``
around each offending joint by a segment whose second derivative is a smooth
monotone quintic blend between the two adjacent branches, plus one localized
bump that restores the exact slope at the right window edge; the new value
and slope come from integrating that second derivative twice, anchored at
the left window edge.

No monotone interpolant can match both the integral and the first moment of
a jump exactly (that would force the interpolant back to the step), so the
double integral leaves an O(radius^2 * |jump|) value residual at the right
window edge.  That residual is absorbed as a constant shim on the downstream
segments: outside the windows the first and second derivatives are
bit-identical and values differ only by the reported shim constants.  Joints
whose window would collapse below float resolution, or where an adjacent
branch blows up inside the window (flat-to-inverse junctions at degenerate
sigma), are skipped and reported; certification there falls back to the
both-one-sided-limits convention.

Mollification never certifies anything by itself: :func:`reverify` sweeps the
inequality conditions over a grid afterwards and flags any destroyed margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RadiusTooLarge
from .profiles import (
    _GL_W,
    _GL_X,
    _rel_gap,
    _smoothstep5,
    JOIN_RTOL,
    D2_JOIN_RTOL,
    MollifiedBlendSegment,
    ProfileLike,
    RadialProfile,
    SegmentBase,
    with_offset,
)
from .pseudoconvexity import Condition, SweepReport, sweep

__all__ = [
    "MollifyWindow",
    "MollifyResult",
    "ReverifyReport",
    "mollify_breakpoints",
    "reverify",
    "mollify_with_reverify",
    "default_radius",
]

# default window radius: 1e-3 x minimal breakpoint gap, auto-halved on failure
DEFAULT_RADIUS_FRACTION = 1e-3
MAX_HALVINGS = 6


@dataclass(frozen=True)
class MollifyWindow:
    breakpoint: float
    radius: float
    d1_jump: float
    d2_jump: float
    shim: float                # constant shim the window requires
    shim_side: str             # "right" (downstream) or "left" (upstream)
    perturbation_bound: float  # ~ radius^2 * |d2 jump| + radius * |d1 jump|


@dataclass
class MollifyResult:
    profile: RadialProfile
    windows: list[MollifyWindow] = field(default_factory=list)
    skipped: list[float] = field(default_factory=list)  # unresolvable joints


def _joint_jumps(p: RadialProfile, b: float) -> tuple[float, float]:
    l1, r1 = p.d1_at(b, "left"), p.d1_at(b, "right")
    l2, r2 = p.d2_at(b, "left"), p.d2_at(b, "right")
    d1j = abs(r1 - l1) if math.isfinite(r1 - l1) else math.inf
    d2j = abs(r2 - l2) if math.isfinite(r2 - l2) else math.inf
    return d1j, d2j


def _needs_window(p: RadialProfile, b: float) -> bool:
    l1, r1 = p.d1_at(b, "left"), p.d1_at(b, "right")
    l2, r2 = p.d2_at(b, "left"), p.d2_at(b, "right")
    if not (math.isfinite(l2) and math.isfinite(r2)):
        return True
    return (_rel_gap(l1, r1) > 10.0 * JOIN_RTOL
            or _rel_gap(l2, r2) > D2_JOIN_RTOL)


def default_radius(p: RadialProfile) -> float:
    """1e-3 times the minimal gap between consecutive joints and endpoints."""
    pts = [p.domain_lo] + p.breakpoints()
    if math.isfinite(p.domain_hi):
        pts.append(p.domain_hi)
    gaps = [b - a for a, b in zip(pts, pts[1:]) if b > a]
    if not gaps:
        return 0.0
    return DEFAULT_RADIUS_FRACTION * min(gaps)


# a second derivative growing by more than this factor between a window edge
# and the joint means the branch blows up inside the window (degenerate
# flat-to-inverse junctions); such joints are skipped, not smoothed
BLOWUP_FACTOR = 1e6


def _build_window(left: SegmentBase, right: SegmentBase, b: float,
                  radius: float) -> tuple[MollifiedBlendSegment, float]:
    """Blend window plus the constant value shim it requires."""
    t0, t1 = b - radius, b + radius
    w = t1 - t0
    v0, m0 = left.value(t0), left.d1(t0)
    v1, m1 = right.value(t1), right.d1(t1)

    def s_base(t: float) -> float:
        u = (t - t0) / w
        q = _smoothstep5(u)
        return (1.0 - q) * left.d2(t) + q * right.d2(t)

    nodes = t0 + w * _GL_X
    i1 = w * sum(wt * s_base(x) for x, wt in zip(nodes, _GL_W))
    # B1 bump carries the slope constraint exactly: int B1 = w/140
    alpha = 140.0 * ((m1 - m0) - i1) / w
    blend = MollifiedBlendSegment(t0, t1, b, v0, m0, alpha, left, right)
    shim = blend.value(t1) - v1
    if abs(shim) <= 1e-13 * max(1.0, abs(v1)):
        shim = 0.0  # quadrature noise; keep both sides bit-identical
    return blend, shim


def _region_value_scale(segments: list[SegmentBase], idx: slice) -> float:
    """Smallest |value| at the segment joints of a region."""
    scale = math.inf
    for seg in segments[idx]:
        for t in (seg.t0, seg.t1):
            if math.isfinite(t):
                try:
                    scale = min(scale, abs(seg.value(t)))
                except Exception:
                    continue
    return scale


def _shim_side(segments: list[SegmentBase], i: int, shim: float) -> str:
    """Which side absorbs the shim: the one whose values dwarf it.

    A constant shift destroys value-sensitive inequalities wherever the
    profile decays toward 0 (flat-extended inverses near the degenerate
    junction), so the shim goes to the robust side; downstream wins ties.
    """
    if shim == 0.0:
        return "right"
    right_robust = _region_value_scale(segments, slice(i + 1, None)) \
        >= 1e4 * abs(shim)
    left_robust = _region_value_scale(segments, slice(0, i + 1)) \
        >= 1e4 * abs(shim)
    return "right" if right_robust or not left_robust else "left"


def _window_blows_up(blend: MollifiedBlendSegment, p: RadialProfile,
                     b: float) -> bool:
    l2, r2 = p.d2_at(b, "left"), p.d2_at(b, "right")
    if not (math.isfinite(l2) and math.isfinite(r2)):
        return True
    try:
        l1, r1 = p.d1_at(b, "left"), p.d1_at(b, "right")
        # an under-resolved boundary layer: a branch slope that moves by
        # orders of magnitude between the joint limit and the window edge
        # (the jump itself is fine; |t|-style kinks keep edge slopes flat)
        slope_base = 1.0 + abs(l1) + abs(r1)
        if abs(blend.left.d1(blend.t0) - l1) > 100.0 * slope_base or \
                abs(blend.right.d1(blend.t1) - r1) > 100.0 * slope_base:
            return True
        l2e = blend.left.d2(blend.t0)
        r2e = blend.right.d2(blend.t1)
        # curvature exploding between a window edge and the joint
        if abs(l2) > BLOWUP_FACTOR * (1.0 + abs(l2e)) or \
                abs(r2) > BLOWUP_FACTOR * (1.0 + abs(r2e)):
            return True
        cap = BLOWUP_FACTOR * (1.0 + abs(l2e) + abs(r2e))
        for u in np.linspace(0.05, 0.95, 9):
            t = blend.t0 + (blend.t1 - blend.t0) * float(u)
            if abs(blend.d2(t)) > cap:
                return True
    except Exception:
        return True
    return False


def mollify_breakpoints(p: RadialProfile, radius: float,
                        skip: frozenset[float] | set[float] = frozenset()
                        ) -> MollifyResult:
    """Replace second-derivative (and slope) joints by C^2 blend windows.

    ``radius`` must be smaller than half the minimal joint gap and the
    windows must stay inside the adjacent segments, else
    :class:`RadiusTooLarge`.  Joints whose window collapses below float
    resolution, whose blend blows up, or that are listed in ``skip`` are
    skipped and reported.  An already-C^2 profile is returned unchanged.
    """
    if radius <= 0.0:
        raise RadiusTooLarge("radius must be positive")
    breaks = p.breakpoints()
    active = [b for b in breaks if _needs_window(p, b)]
    if not active:
        return MollifyResult(p)

    pts = [p.domain_lo] + breaks
    if math.isfinite(p.domain_hi):
        pts.append(p.domain_hi)
    min_gap = min(b - a for a, b in zip(pts, pts[1:]))
    if radius >= 0.5 * min_gap:
        raise RadiusTooLarge(
            f"radius {radius!r} >= half the minimal joint gap {min_gap!r}")

    # pass 1: build blends on the raw segments, collect shims and sides
    segments = list(p.segments)
    windows: list[MollifyWindow] = []
    skipped: list[float] = []
    pieces: list = []   # (kind, payload): ("seg", segment) | ("win", blend, j)
    for i, seg in enumerate(segments):
        pieces.append(("seg", seg))
        b = seg.t1
        if b not in active:
            continue
        if b in skip:
            skipped.append(b)
            continue
        t0, t1 = b - radius, b + radius
        if not (t0 > seg.t0 and t1 < segments[i + 1].t1):
            raise RadiusTooLarge(f"window at {b!r} leaves its segments")
        if t0 >= b or t1 <= b:
            skipped.append(b)  # below float resolution at this magnitude
            continue
        if isinstance(seg, MollifiedBlendSegment) or \
                isinstance(segments[i + 1], MollifiedBlendSegment):
            raise RadiusTooLarge("window would trim an existing blend window")
        blend, shim = _build_window(seg, segments[i + 1], b, radius)
        if _window_blows_up(blend, p, b):
            skipped.append(b)
            continue
        side = _shim_side(list(p.segments), i, shim)
        d1j, d2j = _joint_jumps(p, b)
        bound = radius * radius * d2j + radius * d1j
        windows.append(MollifyWindow(b, radius, d1j, d2j, shim, side, bound))
        pieces[-1] = ("seg", seg._replace_interval(seg.t0, t0))
        pieces.append(("win", blend, len(windows) - 1))
        segments[i + 1] = segments[i + 1]._replace_interval(
            t1, segments[i + 1].t1)
    if not windows:
        return MollifyResult(p, [], skipped)

    # pass 2: cumulative offsets.  A right-shim shifts everything strictly
    # after its window; a left-shim shifts the window itself and everything
    # before it by the negative shim, keeping the fragile side untouched.
    suffix = [0.0] * (len(windows) + 1)
    for j in range(len(windows) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + (
            -windows[j].shim if windows[j].shim_side == "left" else 0.0)
    out: list[SegmentBase] = []
    seen = 0
    running_right = 0.0
    for piece in pieces:
        if piece[0] == "seg":
            off = running_right + suffix[seen]
            out.append(with_offset(piece[1], off))
        else:
            _, blend, j = piece
            off = running_right + suffix[j]
            if off != 0.0:
                blend = MollifiedBlendSegment(
                    blend.t0, blend.t1, blend.breakpoint_t,
                    blend.v0 + off, blend.m0, blend.alpha,
                    blend.left, blend.right)
            out.append(blend)
            if windows[j].shim_side == "right":
                running_right += windows[j].shim
            seen = j + 1
    return MollifyResult(RadialProfile(out), windows, skipped)


@dataclass
class ReverifyReport:
    """Condition sweep after smoothing, compared against a baseline margin."""

    sweep: SweepReport
    direction: str
    min_margin: float
    location: float
    passed: bool
    baseline_margin: float | None = None
    margin_loss: float | None = None
    flagged: bool = False

    def as_dict(self) -> dict:
        return {"direction": self.direction, "min_margin": self.min_margin,
                "location": self.location, "passed": self.passed,
                "baseline_margin": self.baseline_margin,
                "margin_loss": self.margin_loss, "flagged": self.flagged,
                **self.sweep.as_dict()}


def condition_direction(condition: Condition) -> str:
    """Certification direction: margins are rhs-lhs except for system (9)."""
    return "plus" if Condition(condition) is Condition.INEQ9 else "minus"


def reverify(p: ProfileLike, condition: Condition,
             interval: tuple[float, float] | None = None, n_grid: int = 1000,
             lam1: float | None = None,
             baseline_margin: float | None = None) -> ReverifyReport:
    """Sweep a condition over the grid and flag destroyed margins.

    With a ``baseline_margin`` (the pre-smoothing minimum margin) the report
    also carries the margin loss; the report is flagged when the margin is
    gone or more than 10% of the baseline was lost.
    """
    condition = Condition(condition)
    rep = sweep(p, condition, interval, n_grid, lam1=lam1)
    direction = condition_direction(condition)
    if direction == "plus":
        m, at = rep.min_margin_plus, rep.argmin_plus
    else:
        m, at = rep.min_margin_minus, rep.argmin_minus
    passed = m > 0.0
    loss = None
    flagged = not passed
    if baseline_margin is not None:
        loss = baseline_margin - m
        if loss > 0.10 * abs(baseline_margin):
            flagged = True
    return ReverifyReport(rep, direction, m, at, passed, baseline_margin,
                          loss, flagged)


def mollify_with_reverify(p: RadialProfile, condition: Condition,
                          interval: tuple[float, float] | None = None,
                          n_grid: int = 1000, lam1: float | None = None,
                          radius: float | None = None,
                          max_halvings: int = MAX_HALVINGS
                          ) -> tuple[RadialProfile, ReverifyReport, float]:
    """Mollify at the default radius, halving it until reverify stops flagging.

    Returns ``(smoothed profile, reverify report, radius used)``; the last
    attempt is returned even if still flagged (callers decide how loud to be).
    """
    base = reverify(p, condition, interval, n_grid, lam1=lam1)
    r = default_radius(p) if radius is None else radius
    if r <= 0.0:
        return p, base, 0.0
    result, rep = None, None
    for _ in range(max_halvings + 1):
        result = mollify_breakpoints(p, r)
        rep = reverify(result.profile, condition, interval, n_grid, lam1=lam1,
                       baseline_margin=base.min_margin)
        if not rep.flagged:
            return result.profile, rep, r
        r *= 0.5
    return result.profile, rep, r * 2.0
