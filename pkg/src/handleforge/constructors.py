"""Explicit strongly pseudoconvex handle constructions.

Three constructions, each ending in grid certification (the smallness
assumptions behind them are asymptotic, so nothing is trusted without a
sweep):

* outer handle (``lam > 1``): a radial profile ``f`` equal to the conic
  ``g = sqrt(lam t^2 + a)`` for ``t >= eps``, bent below ``g`` on
  ``[sigma, eps)`` through a tangent-line piece, a logarithmic piece and an
  inverse-square-root piece, so that the D_+ system holds and the
  flat-extended inverse satisfies the D_- system.  The region
  ``K = {|x| <= f^{-1}(|y|)}`` is the handlebody.
* inner handle (``lam < 1``): the mirrored table bending ``f`` above ``g``
  with the D_- system throughout; region
  ``L = {|x| > sigma, |y| <= f(|x|)} u {|x| <= sigma}``.
* quadratic model: for ``rho = Q(y, w) - |x|^2`` with
  ``Q = <Ay,y> + <Bv,v> + |u|^2`` (A with min eigenvalue lam1 > 1, B > 0), a
  convex cap ``h`` with ``tau = Q - h(|x|^2)`` strongly plurisubharmonic and
  sublevel sets ``K_c = {tau <= c}``.

Derived constants use deterministic policies where only open ranges are
prescribed; every policy can be overridden through ``opts``.  ``sigma`` is
carried in log-domain alongside its float value, which may underflow for
small ``eta`` (the continuity equation forces
``sigma = (eta/2) exp((c1 - 2)/eta)`` and its mirrored inner form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateConstants,
    EpsilonTooLarge,
    NotPositive,
    NotStronglyPsh,
    ShapeError,
    VerificationFailed,
    WrongRegime,
)
from .levi import BoundaryPoint, quadratic_tau_hessian
from .profiles import (
    InvSqrtIntegralSegment,
    LogIntegralSegment,
    MonotoneInverseSegment,
    PolySegment,
    RadialProfile,
    SqrtAffineSegment,
    SqrtQuadraticSegment,
    profile_from_dict,
    profile_to_dict,
    sqrt_quadratic,
)
from .errors import RadiusTooLarge
from .pseudoconvexity import Condition, sweep
from .smoothing import default_radius, mollify_breakpoints, reverify

__all__ = [
    "BuildOptions",
    "HandleConstruction",
    "QuadraticHandle",
    "derive_constants_outer",
    "derive_constants_inner",
    "build_outer_handle",
    "build_inner_handle",
    "build_quadratic_handle",
    "rescale_outer",
    "membership",
    "handle_to_dict",
    "handle_from_dict",
]


@dataclass(frozen=True)
class BuildOptions:
    """Overridable policies for the free constants and the certification."""

    relax: bool = False          # outer: enlarge eta while certification holds
    eta: float | None = None     # direct eta override
    k: float | None = None       # inner secant slope override
    delta: float | None = None   # quadratic cap slope override
    mu: float | None = None      # quadratic cap curvature override
    n_grid: int = 1000
    n_grid_search: int = 300     # coarser grid while searching relaxed eta
    check: bool = True           # raise VerificationFailed on a failed sweep


# ---------------------------------------------------------------------------
# derived constants
# ---------------------------------------------------------------------------


def _g_data(lam: float, eps: float) -> tuple[float, float, float]:
    g = math.sqrt(lam * eps * eps + 1.0)
    return g, lam * eps / g, lam / g ** 3


def derive_constants_outer(lam: float, eps: float,
                           eta: float | None = None) -> dict:
    """Constants of the outer handle at ``a = 1``.

    ``c = g'(eps) - eps g''(eps) = lam^2 eps^3 / g(eps)^3 > 0``;
    ``eta = min(eps, c^3/3)/2`` unless overridden; ``c1 = c + eta g''(eps)``;
    ``sigma`` solves ``c1 + eta log(eta/(2 sigma)) = 2`` and is returned in
    log-domain alongside the (possibly underflowed) float.
    """
    if lam <= 1.0:
        raise NotStronglyPsh(f"outer handle needs lam > 1, got {lam!r}")
    if eps <= 0.0:
        raise EpsilonTooLarge("eps must be positive")
    g, gp, gpp = _g_data(lam, eps)
    c = lam * lam * eps ** 3 / g ** 3
    if eta is None:
        eta = 0.5 * min(eps, c ** 3 / 3.0)
    if not (0.0 < eta < eps):
        raise EpsilonTooLarge(f"eta={eta!r} outside (0, eps)")
    c1 = c + eta * gpp
    if c1 >= 2.0:
        raise EpsilonTooLarge(
            f"c1={c1!r} >= 2: no sigma with 2*sigma < eta exists")
    log_sigma = math.log(eta / 2.0) + (c1 - 2.0) / eta
    sigma = math.exp(log_sigma)  # may underflow to 0.0; log form is exact
    return {"lam": lam, "eps": eps, "c": c, "eta": eta, "c1": c1,
            "sigma": sigma, "log_sigma": log_sigma,
            "g_eps": g, "gp_eps": gp, "gpp_eps": gpp}


def derive_constants_inner(lam: float, eps: float, k: float | None = None,
                           eta: float | None = None) -> dict:
    """Constants of the inner handle (``lam < 1``, ``a = 1``).

    ``k`` defaults to the midpoint of the admissible range
    ``(g'(eps)/eps, 1) = (lam/g(eps), 1)``; ``eta`` is the largest value of a
    halving search from ``min(eps, 1)/2`` with ``c1 = c + k eta < 0`` and
    ``eta + c1^3 < 0``; ``sigma`` solves ``c1 - eta log(eta/(2 sigma)) = -2``.
    """
    if lam >= 1.0:
        raise WrongRegime(f"inner handle needs lam < 1, got {lam!r}")
    if eps <= 0.0:
        raise EpsilonTooLarge("eps must be positive")
    g, gp, gpp = _g_data(lam, eps)
    slope_lo = lam / g  # = g'(eps)/eps
    if k is None:
        k = 0.5 * (slope_lo + 1.0)
    if not (slope_lo < k < 1.0):
        raise DegenerateConstants(
            f"k={k!r} outside the admissible range ({slope_lo!r}, 1)")
    c = gp - k * eps
    if eta is None:
        eta = 0.5 * min(eps, 1.0)
        for _ in range(200):
            c1 = c + k * eta
            if c1 < 0.0 and eta + c1 ** 3 < 0.0:
                break
            eta *= 0.5
        else:
            raise EpsilonTooLarge("no admissible eta found by halving")
    c1 = c + k * eta
    if not (c1 < 0.0 and eta + c1 ** 3 < 0.0):
        raise EpsilonTooLarge(f"eta={eta!r} violates c1 < 0 or eta + c1^3 < 0")
    if c1 <= -2.0:
        raise DegenerateConstants(
            f"c1={c1!r} <= -2: sigma < eta/2 is impossible")
    log_sigma = math.log(eta / 2.0) - (c1 + 2.0) / eta
    sigma = math.exp(log_sigma)
    return {"lam": lam, "eps": eps, "k": k, "c": c, "eta": eta, "c1": c1,
            "sigma": sigma, "log_sigma": log_sigma,
            "g_eps": g, "gp_eps": gp, "gpp_eps": gpp}


# ---------------------------------------------------------------------------
# profile assembly (a = 1)
# ---------------------------------------------------------------------------


def _assemble_f(cns: dict, inner: bool) -> RadialProfile:
    """Anchored piecewise profile from the derivative table.

    Pieces in ``t`` (outer sign on top, inner below):
    ``+-2 sqrt(sigma)/sqrt(t - sigma)`` on ``(sigma, 2 sigma)``,
    ``c1 +- eta log(eta/t)`` on ``[2 sigma, eta)``, the tangent/secant line
    ``g'(eps) + m (t - eps)`` on ``[eta, eps)`` and ``g`` itself beyond.
    Zero-width pieces (underflowed sigma) are dropped.
    """
    lam, eps, eta, c1, sigma = (cns["lam"], cns["eps"], cns["eta"], cns["c1"],
                                cns["sigma"])
    g, gp = cns["g_eps"], cns["gp_eps"]
    m = cns["k"] if inner else cns["gpp_eps"]
    sign = -1.0 if inner else 1.0
    hi = math.inf if lam >= 0.0 else math.sqrt(1.0 / (-lam))

    taylor = PolySegment(eta, eps, (g, gp, m / 2.0), center=eps)
    f_eta = taylor.value(eta)
    logseg = LogIntegralSegment(2.0 * sigma, eta, c1, sign * eta, eta,
                                anchor_t=eta, anchor_value=f_eta)
    segs = [logseg, taylor, SqrtQuadraticSegment(eps, hi, lam, 1.0)]
    if 2.0 * sigma > sigma:
        f_2sigma = logseg.value(2.0 * sigma)
        root = InvSqrtIntegralSegment(sigma, 2.0 * sigma,
                                      sign * 2.0 * math.sqrt(sigma), sigma,
                                      anchor_t=2.0 * sigma,
                                      anchor_value=f_2sigma)
        segs.insert(0, root)
    else:
        # sigma underflowed: the root piece has no representable width and
        # the log piece runs down to t = sigma (possibly 0.0)
        segs[0] = LogIntegralSegment(sigma, eta, c1, sign * eta, eta,
                                     anchor_t=eta, anchor_value=f_eta)
    return RadialProfile(segs)


def _invert_f(f: RadialProfile, cns: dict, inner: bool,
              t_stop: float) -> RadialProfile:
    """Flat-extended exact inverse profile of ``f`` over ``[sigma, t_stop]``.

    Outer: increasing, flat ``sigma`` below ``f(sigma)``.  Inner: decreasing,
    flat ``sigma`` above ``f(sigma)``.  The inverse of the root piece is the
    exact shifted parabola ``sigma + (u - f(sigma))^2 / (16 sigma)``; the log
    and tangent pieces invert by bracketed root finding; the conic tail (outer
    only) is again a conic: ``g^{-1} = sqrt(u^2/lam - 1/lam)``.
    """
    sigma = cns["sigma"]
    segs_u: list = []
    f_sigma = f.value_at(f.domain_lo, "right")

    pieces = []
    for seg in f.segments:
        lo, hi = seg.t0, min(seg.t1, t_stop)
        if hi > lo:
            pieces.append((seg, lo, hi))

    def inverse_piece(seg, lo, hi):
        u_a = f.value_at(lo, "right")
        u_b = f.value_at(hi, "left") if hi < f.domain_hi else seg.value(hi)
        if isinstance(seg, InvSqrtIntegralSegment):
            # u = f(sigma) +- 4 sqrt(sigma) sqrt(t - sigma)
            return PolySegment(min(u_a, u_b), max(u_a, u_b),
                               (sigma, 0.0, 1.0 / (16.0 * sigma)),
                               center=f_sigma)
        if isinstance(seg, SqrtQuadraticSegment) and not inner:
            return SqrtQuadraticSegment(u_a, math.inf, 1.0 / seg.lam,
                                        -seg.a / seg.lam)
        fwd = RadialProfile([seg._replace_interval(lo, hi)])
        return MonotoneInverseSegment(min(u_a, u_b), max(u_a, u_b), fwd,
                                      lo, hi, increasing=not inner)

    inv = [inverse_piece(seg, lo, hi) for seg, lo, hi in pieces]
    inv = [s for s in inv if s.t1 > s.t0]
    if inner:
        inv = inv[::-1]
        flat = PolySegment(inv[-1].t1, math.inf, (sigma,))
        segs_u = inv + [flat]
    else:
        flat = PolySegment(0.0, inv[0].t0, (sigma,))
        segs_u = [flat] + inv
    # re-join exactly in u after dropping collapsed pieces
    fixed = []
    for i, s in enumerate(segs_u):
        if i + 1 < len(segs_u) and s.t1 != segs_u[i + 1].t0:
            s = s._replace_interval(s.t0, segs_u[i + 1].t0)
        if s.t1 > s.t0:
            fixed.append(s)
    return RadialProfile(fixed)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


@dataclass
class HandleConstruction:
    """An assembled outer or inner handle with its certification."""

    kind: str                    # "outer" | "inner"
    lam: float
    a: float
    eps: float
    constants: dict
    f: RadialProfile
    f_inverse: RadialProfile          # smoothed
    f_inverse_raw: RadialProfile
    certification: dict

    @property
    def sigma(self) -> float:
        return self.constants["sigma"]

    @property
    def passed(self) -> bool:
        return bool(self.certification.get("passed", False))

    def g(self) -> RadialProfile:
        return sqrt_quadratic(self.lam, self.a)

    def membership(self, x: np.ndarray, y: np.ndarray) -> float:
        """Signed region value: negative inside, positive outside."""
        nx = float(np.linalg.norm(np.asarray(x, dtype=float)))
        ny = float(np.linalg.norm(np.asarray(y, dtype=float)))
        return self.membership_norms(nx, ny)

    def membership_norms(self, nx: float, ny: float) -> float:
        if self.kind == "outer":
            # K = {|x| <= f^{-1}(|y|)}
            hi = self.f_inverse.domain_hi
            u = min(ny, hi)
            return nx - self.f_inverse.value_at(u)
        # L = {|x| > sigma, |y| <= f(|x|)} u {|x| <= sigma}
        if nx <= self.sigma:
            return nx - self.sigma
        if nx >= self.f.domain_hi:
            return nx - self.f.domain_hi + 1.0
        return min(nx - self.sigma, ny - self.f.value_at(nx))


def inverse_certification_interval(h_raw: RadialProfile, u_cap: float,
                                   inner: bool) -> tuple[float, float]:
    """Certification interval for the inverse, avoiding zero-value flats.

    When ``sigma`` underflowed to 0.0 the flat extension of the inverse sits
    at value 0 and the positivity-demanding systems are not evaluable there;
    the exact-arithmetic construction (``sigma > 0``) satisfies them
    trivially.  The sweep then stops at the flat junction.
    """
    segs = h_raw.segments
    u_lo, u_hi = h_raw.domain_lo, u_cap
    if not inner and segs[0].value(segs[0].t0) <= 0.0:
        u_lo = segs[0].t1
    if inner and segs[-1].value(segs[-1].t1 if math.isfinite(segs[-1].t1)
                                else segs[-1].t0) <= 0.0:
        u_hi = min(u_cap, segs[-1].t0)
    return u_lo, u_hi


def _certify_handle(cns: dict, f: RadialProfile, h_raw: RadialProfile,
                    inner: bool, n_grid: int) -> tuple[RadialProfile, dict]:
    """Sweep certification of a unit-``a`` handle; returns smoothed inverse."""
    lam, eps, eta, sigma = cns["lam"], cns["eps"], cns["eta"], cns["sigma"]
    cert: dict = {}
    ok = True

    t_hi = 4.0 * eps if lam >= 0.0 else min(4.0 * eps, f.domain_hi)
    f_cond = Condition.INEQ8 if inner else Condition.INEQ9
    f_dir = "minus" if inner else "plus"
    lo_open = sigma + max(1e-3 * sigma, 0.0)
    grid_lo = lo_open if lo_open > sigma else sigma
    # the derivative blows up at sigma itself; the system is certified on the
    # open interval, with log-spaced points hugging the endpoint
    try:
        rep = sweep(f, f_cond, (grid_lo, t_hi), n_grid)
        pts = [r for r in rep.points if r.point > sigma]
        margins = [(r.margin_plus if not inner else r.margin_minus, r.point)
                   for r in pts]
        m, at = min(margins) if margins else (math.nan, math.nan)
        cert["f_system"] = {"condition": f_cond.value, "direction": f_dir,
                            "min_margin": m, "location": at,
                            "n_points": len(pts), "skipped": rep.skipped,
                            "passed": m > 0.0}
        ok &= m > 0.0
    except NotPositive as exc:
        cert["f_system"] = {"condition": f_cond.value, "direction": f_dir,
                            "passed": False, "error": str(exc)}
        ok = False

    # smooth the inverse, then certify the D_- system on it
    u_cap = f.value_at(min(2.0 * eps, 0.5 * (eps + f.domain_hi)
                           if math.isfinite(f.domain_hi) else 2.0 * eps))
    u_cap = max(u_cap, 2.0 * f.value_at(f.domain_lo, "right"))
    u_lo, u_hi = inverse_certification_interval(h_raw, u_cap, inner)
    radius = default_radius(h_raw)
    try:
        h_smooth, h_rep, used = _smooth_inverse(h_raw, (u_lo, u_hi), n_grid,
                                                radius)
    except NotPositive as exc:
        h_smooth, used = h_raw, 0.0
        h_rep = {"passed": False, "error": str(exc)}
    cert["inverse_system"] = h_rep
    cert["smoothing_radius"] = used
    ok &= h_rep["passed"]

    # (i) shared conic segment, exactly
    g = sqrt_quadratic(lam, 1.0)
    ts = np.linspace(eps, min(10.0 * eps, 0.999 * t_hi + 0.001 * eps), 100)
    exact = all(f.value_at(float(t)) == g.value_at(float(t)) for t in ts)
    cert["f_equals_g_beyond_eps"] = {"passed": exact}
    ok &= exact

    # (ii) strict comparison with g on [sigma, eps)
    lo_cmp = max(sigma, lo_open)
    ts = np.concatenate([np.linspace(lo_cmp, eps, 1000, endpoint=False),
                         lo_cmp + (eps - lo_cmp) * 10.0 **
                         (-np.arange(1, 11, dtype=float))])
    diffs = [f.value_at(float(t)) - g.value_at(float(t)) for t in sorted(set(ts.tolist()))]
    if inner:
        worst = min(diffs)
    else:
        worst = min(-d for d in diffs)
    cert["f_vs_g_inside"] = {"min_gap": worst, "passed": worst > 0.0}
    ok &= worst > 0.0

    # (iii) derivative divergence at sigma+ with the root-piece rate
    div = []
    if 2.0 * sigma > sigma:
        for j in range(1, 7):
            t = sigma * (1.0 + 10.0 ** (-j))
            if t == sigma:
                break
            div.append(f.d1_at(t, "right"))
        mono = all(abs(b) > abs(a) for a, b in zip(div, div[1:]))
        big = bool(div) and abs(div[-1]) > 1e2
        sgn = all((d < 0) == inner for d in div)
        cert["fprime_divergence"] = {"values": div,
                                     "passed": mono and big and sgn}
        ok &= mono and big and sgn
    else:
        cert["fprime_divergence"] = {"values": [], "passed": True,
                                     "note": "sigma underflowed; the root "
                                             "piece has no float width"}

    # proof-regime bounds, recorded (asserted only where they must hold)
    g_eps = cns["g_eps"]
    ts = np.linspace(eta, eps, 200, endpoint=False)
    fmin_tangent = min(f.value_at(float(t)) for t in ts)
    if inner:
        cert["f_bounds"] = {"min_f_on_secant_piece": fmin_tangent,
                            "passed": fmin_tangent > 0.0}
        ok &= fmin_tangent > 0.0
        # secant bound f'(t) < lam t / g(eps), an identity of the k-choice
        gaps = [cns["lam"] * float(t) / g_eps - f.d1_at(float(t))
                for t in ts]
        cert["secant_slope_bound"] = {"min_gap": min(gaps),
                                      "passed": min(gaps) > 0.0}
        ok &= min(gaps) > 0.0
    else:
        bound = 1.0 / g_eps
        cert["case1_bound"] = {"min_f": fmin_tangent, "bound": bound,
                               "passed": fmin_tangent > bound}
        ok &= fmin_tangent > bound
        f_sig = f.value_at(f.domain_lo, "right")
        cert["f_sigma_positive"] = {"f_sigma": f_sig, "passed": f_sig > 0.0}
        ok &= f_sig > 0.0
        M = 1.0 / g_eps - eta * cns["gp_eps"] - eta * eta
        cert["case2_lower_bound"] = {"M": M, "applies": M > 0.5}

    # constants defining equations, sigma in log-domain
    eq = cns["c1"] + (-1.0 if inner else 1.0) * eta * (
        math.log(eta) - math.log(2.0) - cns["log_sigma"])
    target = -2.0 if inner else 2.0
    cert["sigma_equation_residual"] = {"residual": eq - target,
                                       "passed": abs(eq - target) <= 1e-10}
    ok &= abs(eq - target) <= 1e-10

    cert["passed"] = ok
    return h_smooth, cert


def _smooth_inverse(h_raw: RadialProfile, interval: tuple[float, float],
                    n_grid: int,
                    radius: float) -> tuple[RadialProfile, dict, float]:
    base = reverify(h_raw, Condition.INEQ8, interval, n_grid)
    if radius <= 0.0:
        rep = base.as_dict()
        rep["note"] = "no resolvable joint gap; inverse left unsmoothed"
        return h_raw, rep, 0.0
    best = None
    r = radius
    skip: set[float] = set()
    for _ in range(14):
        try:
            res = mollify_breakpoints(h_raw, r, skip=skip)
            rep = reverify(res.profile, Condition.INEQ8, interval, n_grid,
                           baseline_margin=base.min_margin)
        except (NotPositive, RadiusTooLarge):
            # a candidate window drove the inverse negative near the
            # degenerate junction, or the windows no longer fit: halve
            r *= 0.5
            continue
        best = (res, rep, r)
        if not rep.flagged:
            break
        # a violation inside a window means that joint is unsmoothable at
        # float scale (boundary-layer junctions); exclude it and retry
        near = [w for w in res.windows
                if abs(w.breakpoint - rep.location) <= 4.0 * w.radius]
        if near:
            skip.add(near[0].breakpoint)
        else:
            r *= 0.5
    if best is None:
        rep = base.as_dict()
        rep["note"] = "mollification failed; inverse left unsmoothed"
        return h_raw, rep, 0.0
    res, rep, r = best
    out = rep.as_dict()
    out["windows"] = [w.breakpoint for w in res.windows]
    out["skipped_joints"] = res.skipped
    out["shims"] = [w.shim for w in res.windows]
    return res.profile, out, r


def _build_unit_outer(lam: float, eps: float, opts: BuildOptions,
                      eta: float | None) -> HandleConstruction:
    cns = derive_constants_outer(lam, eps, eta=eta)
    f = _assemble_f(cns, inner=False)
    h_raw = _invert_f(f, cns, inner=False, t_stop=math.inf)
    h, cert = _certify_handle(cns, f, h_raw, inner=False, n_grid=opts.n_grid)
    return HandleConstruction("outer", lam, 1.0, eps, cns, f, h, h_raw, cert)


def build_outer_handle(lam: float, a: float = 1.0, eps: float = 0.5,
                       opts: BuildOptions | None = None) -> HandleConstruction:
    """Outer handle for ``lam > 1``; general ``a`` by exact rescaling.

    With ``opts.relax`` the constant ``eta`` is enlarged by doubling from the
    proof's bound for as long as direct grid certification still passes (the
    bound ``eta < c^3/3`` is sufficient, not necessary); the certified build
    with the largest ``eta`` wins.  Raises :class:`VerificationFailed` when
    ``opts.check`` and a sweep fails.
    """
    opts = opts or BuildOptions()
    if a <= 0.0:
        raise EpsilonTooLarge("a must be positive")
    root_a = math.sqrt(a)
    eps_unit = eps / root_a

    if opts.eta is not None:
        built = _build_unit_outer(lam, eps_unit, opts, opts.eta)
        built.constants["relaxed"] = False
    elif opts.relax:
        search = BuildOptions(n_grid=opts.n_grid_search, check=False)
        built = _build_unit_outer(lam, eps_unit, search, None)
        eta0 = built.constants["eta"]
        best = None
        j = 1
        while True:
            eta_try = eta0 * 2.0 ** j
            if eta_try >= eps_unit:
                break
            try:
                cand = _build_unit_outer(lam, eps_unit, search, eta_try)
            except (EpsilonTooLarge, NotPositive, VerificationFailed):
                break
            if not cand.passed:
                break
            best = cand
            j += 1
        chosen_eta = best.constants["eta"] if best else None
        built = _build_unit_outer(lam, eps_unit, opts, chosen_eta)
        built.constants["relaxed"] = best is not None
    else:
        built = _build_unit_outer(lam, eps_unit, opts, None)
        built.constants["relaxed"] = False

    if a != 1.0:
        built = rescale_outer(built, a, n_grid=opts.n_grid)
    if opts.check and not built.passed:
        bad = [k for k, v in built.certification.items()
               if isinstance(v, dict) and not v.get("passed", True)]
        first = built.certification.get(bad[0], {}) if bad else {}
        raise VerificationFailed(
            f"outer handle certification failed: {bad}",
            location=first.get("location"), margin=first.get("min_margin"),
            report=built)
    return built


def build_inner_handle(lam: float, eps: float = 0.5,
                       opts: BuildOptions | None = None) -> HandleConstruction:
    """Inner handle for ``lam < 1`` (``a`` fixed to 1)."""
    opts = opts or BuildOptions()
    cns = derive_constants_inner(lam, eps, k=opts.k, eta=opts.eta)
    f = _assemble_f(cns, inner=True)
    # largest monotone-decreasing run: up to the zero of f' (lam > 0) or eps
    k = cns["k"]
    gp = cns["gp_eps"]
    t_star = eps - gp / k
    t_stop = t_star if cns["eta"] < t_star < eps else eps
    h_raw = _invert_f(f, cns, inner=True, t_stop=t_stop)
    h, cert = _certify_handle(cns, f, h_raw, inner=True, n_grid=opts.n_grid)
    cert["inverse_note"] = (
        f"inverse certified over the monotone run [sigma, {t_stop!r}]"
        + ("" if t_stop < eps or lam > 0.0 else
           "; for lam <= 0 the decreasing run continues beyond eps (flagged)"))
    built = HandleConstruction("inner", lam, 1.0, eps, cns, f, h, h_raw, cert)
    if opts.check and not built.passed:
        bad = [k2 for k2, v in cert.items()
               if isinstance(v, dict) and not v.get("passed", True)]
        first = cert.get(bad[0], {}) if bad else {}
        raise VerificationFailed(
            f"inner handle certification failed: {bad}",
            location=first.get("location"), margin=first.get("min_margin"),
            report=built)
    return built


def rescale_outer(construction: HandleConstruction, a: float,
                  n_grid: int = 1000) -> HandleConstruction:
    """Exact rescaling ``f_a(t) = sqrt(a) f(t/sqrt(a))`` of a unit build.

    All lengths scale by ``sqrt(a)``; derivative tables rescale by
    substitution, so every inequality margin is preserved at matched points.
    """
    if a <= 0.0:
        raise EpsilonTooLarge("a must be positive")
    if construction.a != 1.0:
        raise EpsilonTooLarge("rescale starts from a unit (a=1) construction")
    if a == 1.0:
        return construction
    r = math.sqrt(a)
    cns = dict(construction.constants)
    for key in ("eps", "eta", "sigma"):
        cns[key] = cns[key] * r
    cns["log_sigma"] = cns["log_sigma"] + math.log(r)
    cns["a"] = a
    f = construction.f.rescaled(r)
    h = construction.f_inverse.rescaled(r)
    h_raw = construction.f_inverse_raw.rescaled(r)
    cert = dict(construction.certification)
    cert["rescaled_from_unit"] = {"a": a}
    return HandleConstruction(construction.kind, construction.lam, a,
                              construction.eps * r, cns, f, h, h_raw, cert)


# ---------------------------------------------------------------------------
# quadratic model
# ---------------------------------------------------------------------------


@dataclass
class QuadraticHandle:
    """Cap construction for ``rho = Q(y, w) - |x|^2``."""

    A: np.ndarray
    B: np.ndarray
    k: int
    n: int
    r: float
    eps: float
    t0: float
    delta: float
    mu: float
    R: float
    c0: float
    lam1: float
    h: RadialProfile             # smoothed cap
    h_raw: RadialProfile
    certification: dict

    @property
    def passed(self) -> bool:
        return bool(self.certification.get("passed", False))

    def Q(self, y: np.ndarray, u: np.ndarray | None = None,
          v: np.ndarray | None = None) -> float:
        y = np.asarray(y, dtype=float)
        val = float(y @ self.A @ y)
        if u is not None and np.asarray(u).size:
            u = np.asarray(u, dtype=float)
            v = np.asarray(v, dtype=float)
            val += float(v @ self.B @ v) + float(u @ u)
        return val

    def rho(self, x, y, u=None, v=None) -> float:
        x = np.asarray(x, dtype=float)
        return self.Q(y, u, v) - float(x @ x)

    def tau(self, x, y, u=None, v=None) -> float:
        x = np.asarray(x, dtype=float)
        return self.Q(y, u, v) - self.h.value_at(float(x @ x))

    def tau_field(self) -> Callable[[np.ndarray], float]:
        """Flat-vector field in the FD layout ``[x, u, y, v] -> tau``
        (all real parts first, then all imaginary parts)."""
        k, n = self.k, self.n

        def field_fn(p: np.ndarray) -> float:
            p = np.asarray(p, dtype=float)
            x, u = p[:k], p[k:n]
            y, v = p[n:n + k], p[n + k:]
            return self.tau(x, y, u if u.size else None, v if v.size else None)

        return field_fn

    def membership(self, x, y, u=None, v=None, c: float = 0.0) -> float:
        """Signed value of ``K_c = {tau <= c}``."""
        return self.tau(x, y, u, v) - c


@dataclass(frozen=True)
class _CapModel:
    """Minimal (A, B, h) bundle for the tau Hessian during certification."""

    A: np.ndarray
    B: np.ndarray
    h: RadialProfile


def _parse_spd(M, name: str, pd: bool = True) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    if M.size and float(np.max(np.abs(M - M.T))) > 1e-12 * max(
            1.0, float(np.max(np.abs(M)))):
        raise ShapeError(f"{name} must be symmetric")
    if pd and M.size and float(np.linalg.eigvalsh(M)[0]) <= 0.0:
        raise NotPositive(f"{name} must be positive definite")
    return M


def build_quadratic_handle(A, B, r: float, eps: float,
                           opts: BuildOptions | None = None) -> QuadraticHandle:
    """Cap construction: ``t0 = r + eps``, piecewise
    ``delta t | delta t + mu (sqrt(t) - sqrt(t0))^2 | t - R + h(R)`` with
    ``R = mu^2 t0 / (mu + delta - 1)^2``, then smoothing, then certification
    of ``h' < lam1`` and ``2 t h'' + h' < lam1`` with the middle-piece
    identity ``2 t h'' + h' = mu + delta`` exact before smoothing.
    """
    opts = opts or BuildOptions()
    A = _parse_spd(A, "A", pd=False)
    B = _parse_spd(B, "B", pd=True)
    k = A.shape[0]
    if k < 1:
        raise ShapeError("split dimension k must be >= 1")
    n = k + B.shape[0]
    if r <= 0.0 or eps <= 0.0:
        raise EpsilonTooLarge("r and eps must be positive")
    lam1 = float(np.linalg.eigvalsh(A)[0])
    if lam1 <= 1.0:
        raise NotStronglyPsh(f"min eigenvalue of A is {lam1!r} <= 1")

    t0 = r + eps
    delta = opts.delta if opts.delta is not None else \
        min(eps / (2.0 * t0), (lam1 - 1.0) / 4.0, 0.5)
    mu = opts.mu if opts.mu is not None else 1.0 + (lam1 - 1.0 - delta) / 2.0
    if not (0.0 < delta < 1.0 and mu > 1.0 and delta * t0 < eps
            and 1.0 < mu + delta < lam1):
        raise DegenerateConstants(
            f"delta={delta!r}, mu={mu!r} violate the cap constraints")
    R = mu * mu * t0 / (mu + delta - 1.0) ** 2
    hR = delta * R + mu * (math.sqrt(R) - math.sqrt(t0)) ** 2
    c0 = R - hR

    h_raw = RadialProfile([
        PolySegment(0.0, t0, (0.0, delta)),
        SqrtAffineSegment(t0, R, mu * t0, delta + mu,
                          -2.0 * mu * math.sqrt(t0)),
        PolySegment(R, math.inf, (hR - R, 1.0)),
    ])

    cert: dict = {}
    # pre-smoothing exact checks
    mid = np.linspace(t0, R, 100)[1:-1]
    ident = max(abs(2.0 * float(t) * h_raw.d2_at(float(t))
                    + h_raw.d1_at(float(t)) - (mu + delta)) for t in mid)
    cert["middle_identity"] = {"max_residual": ident, "passed": ident <= 1e-10}
    joints = {"hdot_t0_minus": h_raw.d1_at(t0, "left"),
              "hdot_t0_plus": h_raw.d1_at(t0, "right"),
              "hdot_R_minus": h_raw.d1_at(R, "left"),
              "hdot_R_plus": h_raw.d1_at(R, "right")}
    c1ok = (abs(joints["hdot_t0_minus"] - delta) <= 1e-12
            and abs(joints["hdot_t0_plus"] - delta) <= 1e-12
            and abs(joints["hdot_R_minus"] - 1.0) <= 1e-12
            and abs(joints["hdot_R_plus"] - 1.0) <= 1e-12)
    cert["c1_joints"] = {**joints, "passed": c1ok}
    ordering = (0.0 < r < c0 < R)
    cert["constants_ordering"] = {"r": r, "c0": c0, "R": R, "passed": ordering}

    # smooth until the cap overshoot is within 1e-6 of mu + delta
    interval = (0.0, 2.0 * R)

    def trace_max(rep) -> float:
        return max(max(rec.lhs for sr in cr.sides
                       for rec in sr.records if rec.name == "cap_trace")
                   for cr in rep.points)

    radius = default_radius(h_raw)
    h = h_raw
    used = 0.0
    for _ in range(24):
        res = mollify_breakpoints(h_raw, radius)
        rep = sweep(res.profile, Condition.CAP, interval, opts.n_grid,
                    lam1=lam1)
        if (trace_max(rep) - (mu + delta) <= 1e-6
                and rep.min_margin_minus > 0.0):
            h, used = res.profile, radius
            break
        radius *= 0.5
    cap_rep = sweep(h, Condition.CAP, interval, opts.n_grid, lam1=lam1)
    overshoot = trace_max(cap_rep) - (mu + delta)
    cert["cap_system"] = {"condition": "cap",
                          "min_margin": cap_rep.min_margin_minus,
                          "location": cap_rep.argmin_minus,
                          "overshoot_above_mu_plus_delta": overshoot,
                          "smoothing_radius": used,
                          "passed": cap_rep.min_margin_minus > 0.0
                          and overshoot <= 1e-6 and h is not h_raw}

    # convexity and monotonicity of the smoothed cap
    ts = np.unique(np.concatenate([np.linspace(0.0, 2.0 * R, 400),
                                   np.asarray(h.breakpoints())]))
    hd1 = [h.d1_at(float(t)) for t in ts]
    hd2 = []
    for t in ts:
        t = float(t)
        for side in ("left", "right") if t in h.breakpoints() else ("auto",):
            hd2.append(h.d2_at(t, side))
    conv = min(hd1) > 0.0 and min(hd2) >= -1e-9
    cert["increasing_convex"] = {"min_hdot": min(hd1), "min_hddot": min(hd2),
                                 "passed": conv}

    # Levi certification of tau along the worst A-direction
    v1 = np.linalg.eigh(A)[1][:, 0]
    worst = math.inf
    mid_min = math.inf
    model = _CapModel(A, B, h)
    y0 = np.zeros(k)
    w0 = (np.zeros(n - k), np.zeros(n - k)) if n > k else (None, None)
    for s in np.linspace(0.0, 2.0 * R, 600):
        x = math.sqrt(float(s)) * v1
        p = BoundaryPoint(x, y0, w0[0], w0[1])
        H = quadratic_tau_hessian(model, p)
        eig = float(np.linalg.eigvalsh(H)[0])
        worst = min(worst, eig)
        if t0 + 2.0 * used < s < R - 2.0 * used:
            mid_min = min(mid_min, eig)
    cert["tau_hessian"] = {
        "min_eigenvalue": worst,
        "middle_min_eigenvalue": mid_min,
        "middle_bound": (lam1 - mu - delta) / 2.0,
        "passed": worst > 0.0 and mid_min >= (lam1 - mu - delta) / 2.0 - 1e-8}

    cert["passed"] = all(v.get("passed", True) for v in cert.values()
                         if isinstance(v, dict))
    handle = QuadraticHandle(A, B, k, n, r, eps, t0, delta, mu, R, c0, lam1,
                             h, h_raw, cert)
    if opts.check and not handle.passed:
        bad = [k2 for k2, v in cert.items()
               if isinstance(v, dict) and not v.get("passed", True)]
        raise VerificationFailed(f"quadratic cap certification failed: {bad}",
                                 report=handle)
    return handle


def membership(handle, point, c: float = 0.0) -> float:
    """Signed region value for any construction; negative strictly inside."""
    if isinstance(handle, QuadraticHandle):
        x, y = point.x, point.y
        return handle.membership(x, y, point.u, point.v, c=c)
    return handle.membership(point.x, point.y)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def handle_to_dict(handle) -> dict:
    if isinstance(handle, HandleConstruction):
        cns = {k: v for k, v in handle.constants.items()}
        return {
            "kind": handle.kind,
            "params": {"lambda": handle.lam, "a": handle.a,
                       "eps": handle.eps},
            "constants": cns,
            "profile": profile_to_dict(handle.f),
            "inverse": profile_to_dict(handle.f_inverse),
            "inverse_raw": profile_to_dict(handle.f_inverse_raw),
            "certification": handle.certification,
        }
    if isinstance(handle, QuadraticHandle):
        return {
            "kind": "quadratic",
            "params": {"A": handle.A.tolist(), "B": handle.B.tolist(),
                       "r": handle.r, "eps": handle.eps, "k": handle.k,
                       "n": handle.n},
            "constants": {"t0": handle.t0, "delta": handle.delta,
                          "mu": handle.mu, "R": handle.R, "c0": handle.c0,
                          "lam1": handle.lam1},
            "profile": profile_to_dict(handle.h),
            "profile_raw": profile_to_dict(handle.h_raw),
            "certification": handle.certification,
        }
    raise ShapeError(f"not a handle: {type(handle)!r}")


def handle_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind in ("outer", "inner"):
        return HandleConstruction(
            kind, doc["params"]["lambda"], doc["params"]["a"],
            doc["params"]["eps"], doc["constants"],
            profile_from_dict(doc["profile"]),
            profile_from_dict(doc["inverse"]),
            profile_from_dict(doc["inverse_raw"]),
            doc.get("certification", {}))
    if kind == "quadratic":
        p, cns = doc["params"], doc["constants"]
        return QuadraticHandle(
            np.asarray(p["A"], dtype=float), np.asarray(p["B"], dtype=float),
            int(p["k"]), int(p["n"]), p["r"], p["eps"], cns["t0"],
            cns["delta"], cns["mu"], cns["R"], cns["c0"], cns["lam1"],
            profile_from_dict(doc["profile"]),
            profile_from_dict(doc["profile_raw"]),
            doc.get("certification", {}))
    raise ShapeError(f"unknown handle kind {kind!r}")
