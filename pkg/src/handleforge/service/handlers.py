"""Service operations shared by the HTTP app and the CLI thin client."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from ..constructors import (
    BuildOptions,
    HandleConstruction,
    QuadraticHandle,
    build_inner_handle,
    build_outer_handle,
    build_quadratic_handle,
    handle_from_dict,
    handle_to_dict,
    inverse_certification_interval,
)
from ..errors import UsageError
from ..pseudoconvexity import (
    Condition,
    classify,
    levi_dichotomy_check,
    sweep,
)
from ..profiles import (
    ProfileLike,
    RadialProfile,
    profile_from_dict,
    theta_of_f,
)
from ..smoothing import condition_direction
from .schemas import (
    ConstructInnerRequest,
    ConstructOuterRequest,
    ConstructQuadraticRequest,
    ConstructResponse,
    ExportRequest,
    LeviOracleRow,
    VerifyRequest,
    VerifyResponse,
)

__all__ = [
    "construct_outer",
    "construct_inner",
    "construct_quadratic",
    "verify",
    "export_csv",
    "jsonable",
]


def jsonable(obj: Any) -> Any:
    """Recursively coerce numpy scalars and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def construct_outer(req: ConstructOuterRequest) -> ConstructResponse:
    opts = BuildOptions(relax=req.relax, n_grid=req.grid, check=False)
    handle = build_outer_handle(req.lam, req.a, req.eps, opts)
    doc = jsonable(handle_to_dict(handle))
    return ConstructResponse(passed=handle.passed, handle=doc,
                             certification=doc["certification"])


def construct_inner(req: ConstructInnerRequest) -> ConstructResponse:
    opts = BuildOptions(n_grid=req.grid, check=False)
    handle = build_inner_handle(req.lam, req.eps, opts)
    doc = jsonable(handle_to_dict(handle))
    return ConstructResponse(passed=handle.passed, handle=doc,
                             certification=doc["certification"])


def construct_quadratic(req: ConstructQuadraticRequest) -> ConstructResponse:
    opts = BuildOptions(n_grid=req.grid, check=False)
    handle = build_quadratic_handle(req.A, req.B, req.r, req.eps, opts)
    doc = jsonable(handle_to_dict(handle))
    return ConstructResponse(passed=handle.passed, handle=doc,
                             certification=doc["certification"])


def _load_any(doc: dict):
    """A handle document, or a bare profile document."""
    if doc.get("kind") in ("outer", "inner", "quadratic"):
        return handle_from_dict(doc)
    if "segments" in doc:
        return profile_from_dict(doc)
    raise UsageError("document is neither a handle nor a profile")


def _select_profile(obj, use: str) -> tuple[ProfileLike, dict]:
    """Profile to sweep plus context (open left endpoint, lam1, interval)."""
    ctx: dict = {"interval": None, "lam1": None}
    if isinstance(obj, RadialProfile):
        return obj, ctx
    if isinstance(obj, QuadraticHandle):
        ctx["lam1"] = obj.lam1
        ctx["interval"] = (0.0, 2.0 * obj.R)
        return obj.h, ctx
    if isinstance(obj, HandleConstruction):
        if use == "inverse":
            p = obj.f_inverse
            if obj.kind == "outer":
                u_cap = obj.f.value_at(min(2.0 * obj.eps,
                                           0.999 * obj.f.domain_hi
                                           if math.isfinite(obj.f.domain_hi)
                                           else 2.0 * obj.eps))
            else:
                u_cap = max(2.0 * obj.sigma + 1.0,
                            2.0 * obj.constants["g_eps"])
            ctx["interval"] = inverse_certification_interval(
                p, u_cap, inner=obj.kind == "inner")
            return p, ctx
        sigma = obj.sigma
        hi = 4.0 * obj.eps if math.isinf(obj.f.domain_hi) else \
            min(4.0 * obj.eps, obj.f.domain_hi)
        ctx["interval"] = (sigma + max(1e-3 * sigma, 0.0), hi)
        ctx["exclude_at_or_below"] = sigma
        return obj.f, ctx
    raise UsageError(f"cannot select a profile from {type(obj)!r}")


def verify(req: VerifyRequest) -> VerifyResponse:
    obj = _load_any(req.profile)
    profile, ctx = _select_profile(obj, req.use)
    condition = Condition(req.condition)
    if condition is Condition.CAP and ctx["lam1"] is None:
        raise UsageError("cap condition needs a quadratic handle document")

    if condition is Condition.INEQ2:
        theta = theta_of_f(profile)
        iv = ctx["interval"]
        interval = (iv[0] ** 2, iv[1] ** 2) if iv else None
        rep = sweep(theta, condition, interval, req.grid)
    else:
        rep = sweep(profile, condition, ctx["interval"], req.grid,
                    lam1=ctx["lam1"])
    floor = ctx.get("exclude_at_or_below")
    pts = rep.points if floor is None else \
        [r for r in rep.points if r.point > floor]
    direction = condition_direction(condition) if condition is not Condition.INEQ2 \
        else "minus"
    if direction == "plus":
        vals = [(r.margin_plus, r.point) for r in pts]
    else:
        vals = [(r.margin_minus, r.point) for r in pts]
    m, at = min(vals) if vals else (math.nan, math.nan)

    label = "n/a"
    if condition is not Condition.CAP:
        try:
            form = "theta" if condition is Condition.INEQ2 else "f"
            target = theta_of_f(profile) if form == "theta" else profile
            iv = ctx["interval"]
            if form == "theta" and iv:
                iv = (iv[0] ** 2, iv[1] ** 2)
            label = classify(target, iv, min(req.grid, 400), form=form).label
        except Exception:
            label = "n/a"

    rows = None
    agree = None
    if req.levi_oracle is not None:
        if req.levi_oracle < 2:
            raise UsageError("the rotational model needs n > 1")
        rng = np.random.default_rng(req.seed)
        theta = theta_of_f(profile)
        iv = ctx["interval"] or (profile.domain_lo, profile.domain_hi)
        lo = max(iv[0], profile.domain_lo)
        hi = iv[1] if math.isfinite(iv[1]) else lo + 4.0
        radii = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 20)
        s_vals = [float(t * t) for t in radii]
        checks = levi_dichotomy_check(theta, s_vals, req.levi_oracle, 10, rng)
        rows = [LeviOracleRow(s=c.s, strict_pair=c.verdict_strict,
                              reversed_pair=c.verdict_reverse,
                              min_eig=c.min_eig, max_eig=c.max_eig,
                              agree=c.agree) for c in checks]
        agree = all(c.agree for c in checks)

    passed = bool(m > 0.0) and (agree is not False)
    return VerifyResponse(passed=passed, condition=condition.value,
                          direction=direction, min_margin=float(m),
                          location=float(at), n_points=len(pts),
                          classification=label, levi_oracle=rows,
                          levi_agree=agree)


def _region_polyline(obj, n_points: int) -> list[tuple[float, float]]:
    if isinstance(obj, RadialProfile):
        lo, hi = obj.domain_lo, obj.domain_hi
        if math.isinf(hi):
            anchor = max([1.0] + [abs(b) for b in obj.breakpoints()])
            hi = 4.0 * anchor
        ts = np.linspace(lo, hi, n_points)
        return [(float(t), obj.value_at(float(t))) for t in ts]
    if isinstance(obj, QuadraticHandle):
        # boundary of {tau <= 0} in (|x|, sqrt(Q)) coordinates
        ss = np.linspace(0.0, 2.0 * obj.R, n_points)
        out = []
        for s in ss:
            hval = obj.h.value_at(float(s))
            if hval >= 0.0:
                out.append((math.sqrt(float(s)), math.sqrt(hval)))
        return out
    if isinstance(obj, HandleConstruction) and obj.kind == "outer":
        umax = 1.25 * obj.f.value_at(min(2.0 * obj.eps,
                                         obj.f.domain_hi * 0.999
                                         if math.isfinite(obj.f.domain_hi)
                                         else 2.0 * obj.eps))
        us = np.linspace(0.0, umax, n_points)
        return [(obj.f_inverse.value_at(float(u)), float(u)) for u in us]
    if isinstance(obj, HandleConstruction) and obj.kind == "inner":
        f = obj.f
        hi = f.domain_hi
        if math.isinf(hi):
            hi = 4.0 * obj.eps
        ymax = 1.25 * f.value_at(f.domain_lo, "right")
        sig = obj.sigma
        wall = [(sig, float(y))
                for y in np.linspace(ymax, f.value_at(max(sig, f.domain_lo),
                                                      "right"), n_points // 4)]
        ts = np.linspace(max(sig, f.domain_lo), hi * 0.999, n_points)
        curve = [(float(t), f.value_at(float(t))) for t in ts]
        return wall + curve
    raise UsageError(f"no region export for {type(obj)!r}")


def export_csv(req: ExportRequest) -> str:
    obj = _load_any(req.profile)
    if req.what == "region":
        rows = _region_polyline(obj, req.n_points)
        lines = ["x,y"] + [f"{x!r},{y!r}" for x, y in rows]
        return "\n".join(lines) + "\n"

    profile, ctx = _select_profile(obj, "profile")
    iv = ctx["interval"]
    if iv is None:
        lo, hi = profile.domain_lo, profile.domain_hi
        if math.isinf(hi):
            anchor = max([1.0] + [abs(b) for b in profile.breakpoints()])
            hi = 4.0 * anchor
    else:
        lo, hi = iv
    ts = sorted(set(np.linspace(lo, hi, req.n_points).tolist())
                | {b for b in profile.breakpoints() if lo <= b <= hi})
    if req.what == "fprime":
        lines = ["t,fprime"]
        for t in ts:
            lines.append(f"{t!r},{profile.d1_at(float(t))!r}")
        return "\n".join(lines) + "\n"
    lines = ["t,f,fp,fpp_left,fpp_right"]
    for t in ts:
        t = float(t)
        v, d1 = profile.value_at(t), profile.d1_at(t)
        if t in profile.breakpoints():
            l2, r2 = profile.d2_at(t, "left"), profile.d2_at(t, "right")
        else:
            l2 = r2 = profile.d2_at(t)
        lines.append(f"{t!r},{v!r},{d1!r},{l2!r},{r2!r}")
    return "\n".join(lines) + "\n"
