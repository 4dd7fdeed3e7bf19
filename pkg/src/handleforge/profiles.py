"""Piecewise radial profiles with exact derivatives to order 2.

A :class:`RadialProfile` is a function of one nonnegative real variable
(radius ``t = |x|`` or squared radius ``s = |x|^2``) represented as an ordered
list of closed-form segments.  Every segment evaluates its value and its first
and second derivatives exactly; no global numerical differentiation is ever
used, because the pseudoconvexity inequality checks are sensitive near
breakpoints.

Breakpoint convention
---------------------
Profiles are typically C^1 with jump discontinuities of the second derivative
at segment joints.  Evaluation at order 2 *at* such a joint returns BOTH
one-sided limits as a ``(left, right)`` pair; an inequality involving the
second derivative holds at the joint only if both one-sided limits satisfy it.
The same pair convention applies to order 0/1 at the (rare) joints where the
value or slope itself jumps, e.g. derivative tables that are step functions.

Segment kinds
-------------
``poly``
    ``sum c_i (t - center)^i``; covers constants, affine pieces and the
    antiderivatives of affine derivative tables.
``sqrt_quadratic``
    ``sqrt(lam*t^2 + a)``, the conic profile ``g``.
``sqrt_affine``
    ``a0 + a1*t + b*sqrt(t)``; the middle piece of the quadratic-model cap.
``log_flank`` / ``inv_sqrt_flank``
    value forms ``c1 + k*log(eta_ref/t)`` and ``coef/sqrt(t - sigma)`` used in
    derivative tables.
``log_integral`` / ``inv_sqrt_integral``
    anchored exact antiderivatives of the two flank forms.
``mollified_blend``
    a C^2 window replacing a joint after mollification; evaluates the blended
    second derivative in closed form and integrates it with a fixed
    Gauss-Legendre rule (the window is tiny and the integrand analytic).
``monotone_inverse``
    exact inverse of a strictly monotone stretch of another profile,
    evaluated by bracketed root finding with derivative transport
    ``h' = 1/f'``, ``h'' = -f''/f'^3``.

Profiles serialize to a stable JSON document (``domain``, ``continuity``,
``segments[].kind/interval/coeffs``) and export to CSV with columns
``t, f, f', f'' (left), f'' (right)``.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Iterable, Sequence

import numpy as np

from .errors import (
    DomainEmpty,
    IntegrationError,
    NotMonotone,
    NotPositive,
    OutOfDomain,
    OutOfRange,
)

__all__ = [
    "RadialProfile",
    "CallableProfile",
    "DerivativeView",
    "sqrt_quadratic",
    "integrate_derivative",
    "invert_monotone",
    "theta_of_f",
    "f_of_theta",
    "profile_to_json",
    "profile_from_json",
    "profile_to_csv",
    "SEGMENT_KINDS",
]

# Relative tolerance for one-sided agreement at joints (value and slope).
JOIN_RTOL = 1e-12
# Wider band used when deciding whether a d2 jump is "real".
D2_JOIN_RTOL = 1e-10

_INF = math.inf


def _rel_gap(a: float, b: float) -> float:
    scale = max(1.0, abs(a), abs(b))
    return abs(a - b) / scale


# ---------------------------------------------------------------------------
# segment kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentBase:
    t0: float
    t1: float

    kind: ClassVar[str] = "abstract"

    # -- closed forms ------------------------------------------------------
    def value(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def d1(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def d2(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    # -- structure ---------------------------------------------------------
    def antiderivative(self, anchor_t: float, anchor_value: float) -> "SegmentBase":
        raise IntegrationError(
            f"segment kind {self.kind!r} has no closed-form antiderivative")

    def rescaled(self, r: float) -> "SegmentBase":
        """Return the segment of ``t -> r * self(t/r)`` on the scaled interval."""
        raise NotImplementedError

    def coeffs(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_coeffs(cls, t0: float, t1: float, coeffs: dict) -> "SegmentBase":
        raise NotImplementedError

    def _replace_interval(self, t0: float, t1: float) -> "SegmentBase":
        return type(self).from_coeffs(t0, t1, self.coeffs())


@dataclass(frozen=True)
class PolySegment(SegmentBase):
    coefficients: tuple[float, ...] = (0.0,)
    center: float = 0.0

    kind: ClassVar[str] = "poly"

    def value(self, t: float) -> float:
        u = t - self.center
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * u + c
        return acc

    def d1(self, t: float) -> float:
        u = t - self.center
        acc = 0.0
        for i in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * u + i * self.coefficients[i]
        return acc

    def d2(self, t: float) -> float:
        u = t - self.center
        acc = 0.0
        for i in range(len(self.coefficients) - 1, 1, -1):
            acc = acc * u + i * (i - 1) * self.coefficients[i]
        return acc

    def antiderivative(self, anchor_t: float, anchor_value: float) -> "PolySegment":
        ints = [0.0] + [c / (i + 1) for i, c in enumerate(self.coefficients)]
        seg = PolySegment(self.t0, self.t1, tuple(ints), self.center)
        c0 = anchor_value - seg.value(anchor_t)
        return PolySegment(self.t0, self.t1,
                           (ints[0] + c0,) + tuple(ints[1:]), self.center)

    def rescaled(self, r: float) -> "PolySegment":
        coeffs = tuple(c * r ** (1 - i) for i, c in enumerate(self.coefficients))
        return PolySegment(self.t0 * r, self.t1 * r, coeffs, self.center * r)

    def coeffs(self) -> dict:
        return {"coefficients": list(self.coefficients), "center": self.center}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, tuple(coeffs["coefficients"]), coeffs.get("center", 0.0))


@dataclass(frozen=True)
class SqrtQuadraticSegment(SegmentBase):
    lam: float = 1.0
    a: float = 0.0

    kind: ClassVar[str] = "sqrt_quadratic"

    def _g(self, t: float) -> float:
        s = self.lam * t * t + self.a
        if s < 0.0:
            raise OutOfDomain(f"sqrt_quadratic undefined at t={t!r}")
        return math.sqrt(s)

    def value(self, t: float) -> float:
        return self._g(t)

    def d1(self, t: float) -> float:
        g = self._g(t)
        if g == 0.0:
            return math.copysign(_INF, self.lam * t) if self.lam * t != 0 else 0.0
        return self.lam * t / g

    def d2(self, t: float) -> float:
        g = self._g(t)
        if g == 0.0:
            return math.copysign(_INF, self.lam * self.a) if self.lam * self.a != 0 else 0.0
        return self.lam * self.a / (g * g * g)

    def rescaled(self, r: float) -> "SqrtQuadraticSegment":
        return SqrtQuadraticSegment(self.t0 * r, self.t1 * r, self.lam, self.a * r * r)

    def coeffs(self) -> dict:
        return {"lam": self.lam, "a": self.a}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["lam"], coeffs["a"])


@dataclass(frozen=True)
class SqrtAffineSegment(SegmentBase):
    a0: float = 0.0
    a1: float = 0.0
    b: float = 0.0

    kind: ClassVar[str] = "sqrt_affine"

    def value(self, t: float) -> float:
        return self.a0 + self.a1 * t + self.b * math.sqrt(t)

    def d1(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, self.b) if self.b else self.a1
        return self.a1 + self.b / (2.0 * math.sqrt(t))

    def d2(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, -self.b) if self.b else 0.0
        return -self.b / (4.0 * t * math.sqrt(t))

    def rescaled(self, r: float) -> "SqrtAffineSegment":
        return SqrtAffineSegment(self.t0 * r, self.t1 * r,
                                 self.a0 * r, self.a1, self.b * math.sqrt(r))

    def coeffs(self) -> dict:
        return {"a0": self.a0, "a1": self.a1, "b": self.b}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["a0"], coeffs["a1"], coeffs["b"])


@dataclass(frozen=True)
class LogFlankSegment(SegmentBase):
    """Value form ``c1 + k * log(eta_ref / t)`` (a derivative-table piece)."""

    c1: float = 0.0
    k: float = 0.0
    eta_ref: float = 1.0

    kind: ClassVar[str] = "log_flank"

    def value(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, self.k) if self.k else self.c1
        return self.c1 + self.k * math.log(self.eta_ref / t)

    def d1(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, -self.k) if self.k else 0.0
        return -self.k / t

    def d2(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, self.k) if self.k else 0.0
        return self.k / (t * t)

    def antiderivative(self, anchor_t, anchor_value):
        seg = LogIntegralSegment(self.t0, self.t1, self.c1, self.k,
                                 self.eta_ref, anchor_t, 0.0)
        off = anchor_value - seg.value(anchor_t)
        return LogIntegralSegment(self.t0, self.t1, self.c1, self.k,
                                  self.eta_ref, anchor_t, off)

    def rescaled(self, r: float) -> "LogFlankSegment":
        return LogFlankSegment(self.t0 * r, self.t1 * r,
                               self.c1 * r, self.k * r, self.eta_ref * r)

    def coeffs(self) -> dict:
        return {"c1": self.c1, "k": self.k, "eta_ref": self.eta_ref}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["c1"], coeffs["k"], coeffs["eta_ref"])


@dataclass(frozen=True)
class InvSqrtFlankSegment(SegmentBase):
    """Value form ``coef / sqrt(t - sigma)`` (a derivative-table piece)."""

    coef: float = 1.0
    sigma: float = 0.0

    kind: ClassVar[str] = "inv_sqrt_flank"

    def value(self, t: float) -> float:
        d = t - self.sigma
        if d <= 0.0:
            return math.copysign(_INF, self.coef)
        return self.coef / math.sqrt(d)

    def d1(self, t: float) -> float:
        d = t - self.sigma
        if d <= 0.0:
            return math.copysign(_INF, -self.coef)
        # (coef/d)/sqrt(d): d^{3/2} itself may underflow at tiny sigma
        return -0.5 * (self.coef / d) / math.sqrt(d)

    def d2(self, t: float) -> float:
        d = t - self.sigma
        if d <= 0.0:
            return math.copysign(_INF, self.coef)
        return 0.75 * ((self.coef / d) / d) / math.sqrt(d)

    def antiderivative(self, anchor_t, anchor_value):
        seg = InvSqrtIntegralSegment(self.t0, self.t1, self.coef, self.sigma,
                                     anchor_t, 0.0)
        off = anchor_value - seg.value(anchor_t)
        return InvSqrtIntegralSegment(self.t0, self.t1, self.coef, self.sigma,
                                      anchor_t, off)

    def rescaled(self, r: float) -> "InvSqrtFlankSegment":
        return InvSqrtFlankSegment(self.t0 * r, self.t1 * r,
                                   self.coef * r ** 1.5, self.sigma * r)

    def coeffs(self) -> dict:
        return {"coef": self.coef, "sigma": self.sigma}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["coef"], coeffs["sigma"])


@dataclass(frozen=True)
class LogIntegralSegment(SegmentBase):
    """Anchored antiderivative of ``c1 + k*log(eta_ref/t)``.

    ``value(t) = v_a + Phi(t) - Phi(t_a)`` with
    ``Phi(t) = c1*t + k*t*(log(eta_ref/t) + 1)``.
    """

    c1: float = 0.0
    k: float = 0.0
    eta_ref: float = 1.0
    anchor_t: float = 0.0
    anchor_value: float = 0.0

    kind: ClassVar[str] = "log_integral"

    def _phi(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        return self.c1 * t + self.k * t * (math.log(self.eta_ref / t) + 1.0)

    def value(self, t: float) -> float:
        return self.anchor_value + self._phi(t) - self._phi(self.anchor_t)

    def d1(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, self.k) if self.k else self.c1
        return self.c1 + self.k * math.log(self.eta_ref / t)

    def d2(self, t: float) -> float:
        if t == 0.0:
            return math.copysign(_INF, -self.k) if self.k else 0.0
        return -self.k / t

    def rescaled(self, r: float) -> "LogIntegralSegment":
        return LogIntegralSegment(self.t0 * r, self.t1 * r, self.c1, self.k,
                                  self.eta_ref * r, self.anchor_t * r,
                                  self.anchor_value * r)

    def coeffs(self) -> dict:
        return {"c1": self.c1, "k": self.k, "eta_ref": self.eta_ref,
                "anchor_t": self.anchor_t, "anchor_value": self.anchor_value}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["c1"], coeffs["k"], coeffs["eta_ref"],
                   coeffs["anchor_t"], coeffs["anchor_value"])


@dataclass(frozen=True)
class InvSqrtIntegralSegment(SegmentBase):
    """Anchored antiderivative of ``coef / sqrt(t - sigma)``.

    ``value(t) = v_a + 2*coef*(sqrt(t - sigma) - sqrt(t_a - sigma))``.  The
    endpoint singularity of the derivative at ``t = sigma`` is integrable.
    """

    coef: float = 1.0
    sigma: float = 0.0
    anchor_t: float = 0.0
    anchor_value: float = 0.0

    kind: ClassVar[str] = "inv_sqrt_integral"

    def _root(self, t: float) -> float:
        d = t - self.sigma
        return math.sqrt(d) if d > 0.0 else 0.0

    def value(self, t: float) -> float:
        return (self.anchor_value
                + 2.0 * self.coef * (self._root(t) - self._root(self.anchor_t)))

    def d1(self, t: float) -> float:
        d = t - self.sigma
        if d <= 0.0:
            return math.copysign(_INF, self.coef)
        return self.coef / math.sqrt(d)

    def d2(self, t: float) -> float:
        d = t - self.sigma
        if d <= 0.0:
            return math.copysign(_INF, -self.coef)
        return -0.5 * (self.coef / d) / math.sqrt(d)

    def rescaled(self, r: float) -> "InvSqrtIntegralSegment":
        # derivative rescales by substitution only: coef/sqrt(t/r - sigma)
        # = (coef*sqrt(r))/sqrt(t - sigma*r)
        return InvSqrtIntegralSegment(self.t0 * r, self.t1 * r,
                                      self.coef * math.sqrt(r),
                                      self.sigma * r, self.anchor_t * r,
                                      self.anchor_value * r)

    def coeffs(self) -> dict:
        return {"coef": self.coef, "sigma": self.sigma,
                "anchor_t": self.anchor_t, "anchor_value": self.anchor_value}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["coef"], coeffs["sigma"],
                   coeffs["anchor_t"], coeffs["anchor_value"])


# fixed Gauss-Legendre rule on [0, 1]; mollified windows are tiny and their
# integrands analytic, so 48 nodes are far beyond machine precision.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _smoothstep5(u: float) -> float:
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def _bump1(u: float) -> float:
    v = u * (1.0 - u)
    return v * v * v


def _bump2(u: float) -> float:
    return _bump1(u) * (1.0 - 2.0 * u)


@dataclass(frozen=True)
class MollifiedBlendSegment(SegmentBase):
    """C^2 replacement of a profile on a window around a joint.

    The second derivative on ``[t0, t1]`` is a quintic monotone blend of the
    adjacent segments' (analytically extended) second derivatives plus one
    localized bump that makes the slope at ``t1`` exact:

    ``s(t) = (1-q(u)) L''(t) + q(u) R''(t) + alpha*B1(u)``

    with ``u = (t-t0)/(t1-t0)``, ``q`` the quintic smoothstep and
    ``B1 = u^3 (1-u)^3``.  Value and slope are the anchored double integral
    of ``s``, evaluated with a fixed Gauss-Legendre rule.  The residual value
    mismatch at ``t1`` (order ``radius^2 * |d2 jump|``) is carried by the
    mollifier as a constant shim on the downstream segments.
    """

    breakpoint_t: float = 0.0
    v0: float = 0.0
    m0: float = 0.0
    alpha: float = 0.0
    left: SegmentBase = field(default_factory=lambda: PolySegment(0.0, 1.0))
    right: SegmentBase = field(default_factory=lambda: PolySegment(0.0, 1.0))

    kind: ClassVar[str] = "mollified_blend"

    def _s(self, t: float) -> float:
        w = self.t1 - self.t0
        # clamp so the analytic extension just outside the window is the
        # plain adjacent branch (bump and blend saturate)
        u = min(max((t - self.t0) / w, 0.0), 1.0)
        q = _smoothstep5(u)
        return ((1.0 - q) * self.left.d2(t) + q * self.right.d2(t)
                + self.alpha * _bump1(u))

    def d2(self, t: float) -> float:
        return self._s(t)

    def d1(self, t: float) -> float:
        if t == self.t0:
            return self.m0
        h = t - self.t0
        nodes = self.t0 + h * _GL_X
        acc = sum(w * self._s(x) for x, w in zip(nodes, _GL_W))
        return self.m0 + h * acc

    def value(self, t: float) -> float:
        if t == self.t0:
            return self.v0
        h = t - self.t0
        nodes = self.t0 + h * _GL_X
        acc = sum(w * (t - x) * self._s(x) for x, w in zip(nodes, _GL_W))
        return self.v0 + self.m0 * h + h * acc

    def rescaled(self, r: float) -> "MollifiedBlendSegment":
        return MollifiedBlendSegment(
            self.t0 * r, self.t1 * r, self.breakpoint_t * r,
            self.v0 * r, self.m0, self.alpha / r,
            self.left.rescaled(r), self.right.rescaled(r))

    def coeffs(self) -> dict:
        return {
            "breakpoint_t": self.breakpoint_t, "v0": self.v0, "m0": self.m0,
            "alpha": self.alpha,
            "left": _segment_to_dict(self.left),
            "right": _segment_to_dict(self.right),
            # redundant knot table for external plotting tools
            "knots": self._knot_table(),
        }

    def _knot_table(self) -> list[list[float]]:
        ts = np.linspace(self.t0, self.t1, 9)
        return [[float(t), self.value(float(t))] for t in ts]

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, coeffs["breakpoint_t"], coeffs["v0"], coeffs["m0"],
                   coeffs["alpha"],
                   _segment_from_dict(coeffs["left"]),
                   _segment_from_dict(coeffs["right"]))

    def _replace_interval(self, t0: float, t1: float) -> "SegmentBase":
        raise ValueError("a mollified window cannot be trimmed; "
                         "its interval is a functional parameter")


@dataclass(frozen=True)
class OffsetSegment(SegmentBase):
    """A segment shifted by a constant; carries mollification value shims."""

    inner: SegmentBase = field(default_factory=lambda: PolySegment(0.0, 1.0))
    offset: float = 0.0

    kind: ClassVar[str] = "offset"

    def value(self, t: float) -> float:
        return self.inner.value(t) + self.offset

    def d1(self, t: float) -> float:
        return self.inner.d1(t)

    def d2(self, t: float) -> float:
        return self.inner.d2(t)

    def rescaled(self, r: float) -> "OffsetSegment":
        return OffsetSegment(self.t0 * r, self.t1 * r,
                             self.inner.rescaled(r), self.offset * r)

    def coeffs(self) -> dict:
        return {"inner": _segment_to_dict(self.inner), "offset": self.offset}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, _segment_from_dict(coeffs["inner"]),
                   coeffs["offset"])

    def _replace_interval(self, t0: float, t1: float) -> "OffsetSegment":
        return OffsetSegment(t0, t1, self.inner._replace_interval(t0, t1),
                             self.offset)


def with_offset(seg: SegmentBase, delta: float) -> SegmentBase:
    """Shift a segment by a constant, collapsing nested offsets."""
    if delta == 0.0:
        return seg
    if isinstance(seg, OffsetSegment):
        return OffsetSegment(seg.t0, seg.t1, seg.inner, seg.offset + delta)
    if isinstance(seg, PolySegment):
        c = list(seg.coefficients)
        c[0] += delta
        return PolySegment(seg.t0, seg.t1, tuple(c), seg.center)
    return OffsetSegment(seg.t0, seg.t1, seg, delta)


@dataclass(frozen=True)
class MonotoneInverseSegment(SegmentBase):
    """Exact inverse of a strictly monotone stretch of a forward profile.

    ``value(u)`` solves ``forward(t) = u`` on ``[f_lo, f_hi]`` by bisection
    plus safeguarded Newton; derivatives transport as ``h' = 1/f'(t)`` and
    ``h'' = -f''(t)/f'(t)^3`` (0 where ``f'`` is infinite).
    """

    forward: "RadialProfile" = None  # type: ignore[assignment]
    f_lo: float = 0.0
    f_hi: float = 1.0
    increasing: bool = True

    kind: ClassVar[str] = "monotone_inverse"

    def _solve(self, u: float) -> float:
        # queries outside the forward range are clamped: the inverse extends
        # flat, which is the analytic extension mollification windows need
        fwd = self.forward
        lo, hi = self.f_lo, self.f_hi
        if self.increasing:
            flo, fhi = fwd.value_at(lo, "right"), fwd.value_at(hi, "left")
        else:
            flo, fhi = fwd.value_at(hi, "left"), fwd.value_at(lo, "right")
        umin, umax = min(flo, fhi), max(flo, fhi)
        u = min(max(u, umin), umax)
        sgn = 1.0 if self.increasing else -1.0
        tol_u = 1e-14 * max(1.0, abs(u))
        t = 0.5 * (lo + hi)
        a, b = lo, hi
        for _ in range(200):
            ft = fwd.value_at(t, "auto")
            err = ft - u
            if abs(err) <= tol_u:
                return t
            if sgn * err > 0.0:
                b = t
            else:
                a = t
            dp = fwd.d1_at(t, "auto")
            if dp != 0.0 and math.isfinite(dp):
                tn = t - err / dp
            else:
                tn = 0.5 * (a + b)
            if not (a < tn < b):
                tn = 0.5 * (a + b)
            if tn == t:
                return t
            t = tn
        return t

    def value(self, u: float) -> float:
        return self._solve(u)

    def d1(self, u: float) -> float:
        t = self._solve(u)
        dp = self.forward.d1_at(t, "auto")
        if not math.isfinite(dp):
            return 0.0
        return 1.0 / dp

    def d2(self, u: float) -> float:
        t = self._solve(u)
        dp = self.forward.d1_at(t, "auto")
        if not math.isfinite(dp):
            return 0.0
        dpp = self.forward.d2_at(t, "auto")
        return -dpp / (dp * dp * dp)

    def rescaled(self, r: float) -> "MonotoneInverseSegment":
        return MonotoneInverseSegment(self.t0 * r, self.t1 * r,
                                      self.forward.rescaled(r),
                                      self.f_lo * r, self.f_hi * r,
                                      self.increasing)

    def coeffs(self) -> dict:
        return {"forward": profile_to_dict(self.forward),
                "f_lo": self.f_lo, "f_hi": self.f_hi,
                "increasing": self.increasing}

    @classmethod
    def from_coeffs(cls, t0, t1, coeffs):
        return cls(t0, t1, profile_from_dict(coeffs["forward"]),
                   coeffs["f_lo"], coeffs["f_hi"], coeffs["increasing"])


SEGMENT_KINDS: dict[str, type[SegmentBase]] = {
    cls.kind: cls
    for cls in (PolySegment, SqrtQuadraticSegment, SqrtAffineSegment,
                LogFlankSegment, InvSqrtFlankSegment, LogIntegralSegment,
                InvSqrtIntegralSegment, MollifiedBlendSegment,
                MonotoneInverseSegment, OffsetSegment)
}


def _segment_to_dict(seg: SegmentBase) -> dict:
    t1 = None if math.isinf(seg.t1) else seg.t1
    return {"kind": seg.kind, "interval": [seg.t0, t1], "coeffs": seg.coeffs()}


def _segment_from_dict(doc: dict) -> SegmentBase:
    cls = SEGMENT_KINDS[doc["kind"]]
    t0, t1 = doc["interval"]
    return cls.from_coeffs(float(t0), _INF if t1 is None else float(t1),
                           doc["coeffs"])


# ---------------------------------------------------------------------------
# profile protocol
# ---------------------------------------------------------------------------


class ProfileLike:
    """Minimal evaluation protocol shared by profiles and profile views."""

    continuity_class: str = "C2"

    @property
    def domain_lo(self) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def domain_hi(self) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return []

    def value_at(self, t: float, side: str = "auto") -> float:
        raise NotImplementedError

    def d1_at(self, t: float, side: str = "auto") -> float:
        raise NotImplementedError

    def d2_at(self, t: float, side: str = "auto") -> float:
        raise NotImplementedError

    # -- common helpers ------------------------------------------------------
    def _check_domain(self, t: float) -> None:
        # a few ulps of slack: change-of-variables views compose t -> t^2
        # -> sqrt and shrink domains by one rounding step
        lo, hi = self.domain_lo, self.domain_hi
        slack = 8.0 * math.ulp(max(1.0, abs(t)))
        if not (lo - slack <= t <= hi + slack):
            raise OutOfDomain(f"t={t!r} outside [{lo!r}, {hi!r}]")

    def __call__(self, t: float) -> float:
        return self.value_at(t)

    def eval(self, t: float, order: int = 0):
        """Evaluate at ``t``; at a joint where the requested order jumps,
        return the ``(left, right)`` pair of one-sided limits."""
        self._check_domain(t)
        getter = {0: self.value_at, 1: self.d1_at, 2: self.d2_at}.get(order)
        if getter is None:
            raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
        if t in self.breakpoints():
            left, right = getter(t, "left"), getter(t, "right")
            tol = D2_JOIN_RTOL if order == 2 else JOIN_RTOL
            if not (math.isfinite(left) and math.isfinite(right)):
                if left == right:
                    return left
                return (left, right)
            if _rel_gap(left, right) > tol:
                return (left, right)
            return right
        return getter(t, "auto")

    def derivative(self) -> "DerivativeView":
        return DerivativeView(self)


class RadialProfile(ProfileLike):
    """A piecewise closed-form profile; immutable after construction."""

    def __init__(self, segments: Sequence[SegmentBase],
                 continuity_class: str | None = None):
        segs = tuple(segments)
        if not segs:
            raise DomainEmpty("profile needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if not (a.t1 == b.t0):
                raise ValueError(f"segments not contiguous at {a.t1!r} vs {b.t0!r}")
        for s in segs:
            if not (s.t1 > s.t0):
                raise ValueError(f"empty segment interval [{s.t0!r}, {s.t1!r}]")
        self._segments = segs
        self._starts = [s.t0 for s in segs]
        self._breaks = [s.t0 for s in segs[1:]]
        self.continuity_class = (continuity_class if continuity_class is not None
                                 else self._classify_continuity())

    # -- structure -----------------------------------------------------------
    @property
    def segments(self) -> tuple[SegmentBase, ...]:
        return self._segments

    @property
    def domain_lo(self) -> float:
        return self._segments[0].t0

    @property
    def domain_hi(self) -> float:
        return self._segments[-1].t1

    def breakpoints(self) -> list[float]:
        return list(self._breaks)

    # classification threshold: a joint counts as C^1 when value and slope
    # agree to 1e-9 relative (builders produce exact joints; the tighter
    # 1e-12 agreement is asserted by the invariant tests)
    _C1_CLASS_RTOL = 1e-9

    def _classify_continuity(self) -> str:
        worst = "C2"
        for i, b in enumerate(self._breaks):
            left, right = self._segments[i], self._segments[i + 1]
            if _rel_gap(left.value(b), right.value(b)) > self._C1_CLASS_RTOL or \
                    _rel_gap(left.d1(b), right.d1(b)) > self._C1_CLASS_RTOL:
                return "C0"
            l2, r2 = left.d2(b), right.d2(b)
            if not (math.isfinite(l2) and math.isfinite(r2)) or \
                    _rel_gap(l2, r2) > D2_JOIN_RTOL:
                worst = "C1_piecewise_C2"
        return worst

    # -- evaluation ----------------------------------------------------------
    def _seg_for(self, t: float, side: str) -> SegmentBase:
        self._check_domain(t)
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            i = 0
        if side == "left" and i > 0 and t == self._starts[i]:
            i -= 1
        return self._segments[min(i, len(self._segments) - 1)]

    def value_at(self, t: float, side: str = "auto") -> float:
        return self._seg_for(t, side).value(t)

    def d1_at(self, t: float, side: str = "auto") -> float:
        return self._seg_for(t, side).d1(t)

    def d2_at(self, t: float, side: str = "auto") -> float:
        return self._seg_for(t, side).d2(t)

    # -- transforms ----------------------------------------------------------
    def rescaled(self, r: float) -> "RadialProfile":
        if r <= 0.0:
            raise ValueError("rescale factor must be positive")
        return RadialProfile([s.rescaled(r) for s in self._segments])

    def __repr__(self) -> str:
        kinds = ",".join(s.kind for s in self._segments)
        return (f"RadialProfile([{self.domain_lo:g},{self.domain_hi:g}] "
                f"{self.continuity_class} <{kinds}>)")


class CallableProfile(ProfileLike):
    """Profile backed by callables (splines, ODE solutions); not serializable."""

    def __init__(self, value: Callable[[float], float],
                 d1: Callable[[float], float],
                 d2: Callable[[float], float],
                 domain: tuple[float, float],
                 breakpoints: Iterable[float] = (),
                 continuity_class: str = "C2"):
        self._value, self._d1, self._d2 = value, d1, d2
        self._lo, self._hi = domain
        self._breaks = sorted(breakpoints)
        self.continuity_class = continuity_class

    @property
    def domain_lo(self) -> float:
        return self._lo

    @property
    def domain_hi(self) -> float:
        return self._hi

    def breakpoints(self) -> list[float]:
        return list(self._breaks)

    def value_at(self, t: float, side: str = "auto") -> float:
        self._check_domain(t)
        return float(self._value(t))

    def d1_at(self, t: float, side: str = "auto") -> float:
        self._check_domain(t)
        return float(self._d1(t))

    def d2_at(self, t: float, side: str = "auto") -> float:
        self._check_domain(t)
        return float(self._d2(t))


class DerivativeView(ProfileLike):
    """Order-1 view of a profile: value is the parent's first derivative."""

    def __init__(self, parent: ProfileLike):
        self.parent = parent
        self.continuity_class = "C1_piecewise_C2" \
            if parent.continuity_class in ("C2", "C1_piecewise_C2") else "C0"

    @property
    def domain_lo(self) -> float:
        return self.parent.domain_lo

    @property
    def domain_hi(self) -> float:
        return self.parent.domain_hi

    def breakpoints(self) -> list[float]:
        return self.parent.breakpoints()

    def value_at(self, t: float, side: str = "auto") -> float:
        return self.parent.d1_at(t, side)

    def d1_at(self, t: float, side: str = "auto") -> float:
        return self.parent.d2_at(t, side)

    def d2_at(self, t: float, side: str = "auto") -> float:
        raise NotImplementedError("second derivative of a derivative view")


def _snap_to_break(t: float, breaks: Sequence[float]) -> float:
    for b in breaks:
        if abs(t - b) <= 8.0 * math.ulp(max(1.0, abs(b))):
            return b
    return t


class ThetaOfF(ProfileLike):
    """Change of variables ``theta(s) = f(sqrt(s))^2`` with exact transport.

    ``theta' = f f'/t`` and ``2 t^2 theta'' = f f'' + f'^2 - f f'/t`` at
    ``t = sqrt(s)``.
    """

    def __init__(self, f: ProfileLike):
        self.f = f
        if f.domain_lo < 0.0:
            raise OutOfDomain("f must live on t >= 0")
        self.continuity_class = f.continuity_class

    @property
    def domain_lo(self) -> float:
        return self.f.domain_lo ** 2

    @property
    def domain_hi(self) -> float:
        return self.f.domain_hi ** 2

    def breakpoints(self) -> list[float]:
        return [b * b for b in self.f.breakpoints()]

    def _t(self, s: float) -> float:
        if s < 0.0:
            raise OutOfDomain("s must be nonnegative")
        return _snap_to_break(math.sqrt(s), self.f.breakpoints())

    def value_at(self, s: float, side: str = "auto") -> float:
        v = self.f.value_at(self._t(s), side)
        if v <= 0.0:
            raise NotPositive(f"f({math.sqrt(s)!r}) = {v!r} <= 0")
        return v * v

    def d1_at(self, s: float, side: str = "auto") -> float:
        t = self._t(s)
        if t == 0.0:
            # limit f f'/t exists when f is flat at 0 (flat-extended inverses)
            if self.f.d1_at(0.0, side) == 0.0 and self.f.d2_at(0.0, side) == 0.0:
                return 0.0
            raise OutOfDomain("theta transport undefined at t=0")
        return self.f.value_at(t, side) * self.f.d1_at(t, side) / t

    def d2_at(self, s: float, side: str = "auto") -> float:
        t = self._t(s)
        if t == 0.0:
            if self.f.d1_at(0.0, side) == 0.0 and self.f.d2_at(0.0, side) == 0.0:
                return 0.0
            raise OutOfDomain("theta transport undefined at t=0")
        v = self.f.value_at(t, side)
        d1 = self.f.d1_at(t, side)
        d2 = self.f.d2_at(t, side)
        return (v * d2 + d1 * d1 - v * d1 / t) / (2.0 * t * t)


class FOfTheta(ProfileLike):
    """Inverse change of variables ``f(t) = sqrt(theta(t^2))``."""

    def __init__(self, theta: ProfileLike):
        self.theta = theta
        if theta.domain_lo < 0.0:
            raise OutOfDomain("theta must live on s >= 0")
        self.continuity_class = theta.continuity_class

    @property
    def domain_lo(self) -> float:
        return math.sqrt(self.theta.domain_lo)

    @property
    def domain_hi(self) -> float:
        return math.sqrt(self.theta.domain_hi)

    def breakpoints(self) -> list[float]:
        return [math.sqrt(b) for b in self.theta.breakpoints()]

    def _s(self, t: float) -> float:
        if t < 0.0:
            raise OutOfDomain("t must be nonnegative")
        return _snap_to_break(t * t, self.theta.breakpoints())

    def value_at(self, t: float, side: str = "auto") -> float:
        v = self.theta.value_at(self._s(t), side)
        if v <= 0.0:
            raise NotPositive(f"theta({t * t!r}) = {v!r} <= 0")
        return math.sqrt(v)

    def d1_at(self, t: float, side: str = "auto") -> float:
        if t == 0.0:
            raise OutOfDomain("f transport undefined at t=0")
        return t * self.theta.d1_at(self._s(t), side) / self.value_at(t, side)

    def d2_at(self, t: float, side: str = "auto") -> float:
        if t == 0.0:
            raise OutOfDomain("f transport undefined at t=0")
        s = self._s(t)
        v = self.value_at(t, side)
        d1 = t * self.theta.d1_at(s, side) / v
        d2s = self.theta.d2_at(s, side)
        return (2.0 * t * t * d2s - d1 * d1 + v * d1 / t) / v


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def sqrt_quadratic(lam: float, a: float) -> RadialProfile:
    """The conic profile ``g(t) = sqrt(lam*t^2 + a)`` on its natural domain.

    Exact derivatives ``g' = lam*t/g`` and ``g'' = lam*a/g^3``.
    """
    if lam <= 0.0 and a <= 0.0:
        raise DomainEmpty(f"lam={lam!r}, a={a!r} give an empty domain")
    if lam > 0.0:
        lo = math.sqrt(-a / lam) if a < 0.0 else 0.0
        hi = _INF
    elif lam == 0.0:
        lo, hi = 0.0, _INF
    else:
        lo, hi = 0.0, math.sqrt(a / (-lam))
    return RadialProfile([SqrtQuadraticSegment(lo, hi, lam, a)])


def integrate_derivative(fprime: ProfileLike, anchor_t: float,
                         anchor_value: float) -> ProfileLike:
    """Antiderivative ``F`` of a derivative table with ``F(anchor_t) = v``.

    For a :class:`DerivativeView` the parent is shifted exactly.  For segment
    profiles each piece maps to its closed-form antiderivative; anchor values
    chain across joints so ``F`` is continuous.
    """
    if isinstance(fprime, DerivativeView):
        parent = fprime.parent
        off = anchor_value - parent.value_at(anchor_t)
        return _ShiftedProfile(parent, off)
    if not isinstance(fprime, RadialProfile):
        raise IntegrationError("integrate_derivative needs a RadialProfile "
                               "or DerivativeView")
    if not (fprime.domain_lo <= anchor_t <= fprime.domain_hi):
        raise OutOfDomain(f"anchor {anchor_t!r} outside domain")

    segs = fprime.segments
    i_anchor = bisect.bisect_right([s.t0 for s in segs], anchor_t) - 1
    i_anchor = max(0, min(i_anchor, len(segs) - 1))

    out: list[SegmentBase | None] = [None] * len(segs)
    out[i_anchor] = segs[i_anchor].antiderivative(anchor_t, anchor_value)
    for i in range(i_anchor + 1, len(segs)):
        b = segs[i].t0
        out[i] = segs[i].antiderivative(b, out[i - 1].value(b))
    for i in range(i_anchor - 1, -1, -1):
        b = segs[i].t1
        out[i] = segs[i].antiderivative(b, out[i + 1].value(b))
    return RadialProfile(out)  # type: ignore[arg-type]


class _ShiftedProfile(ProfileLike):
    """Profile plus a constant; used by the antiderivative shortcut."""

    def __init__(self, parent: ProfileLike, offset: float):
        self.parent, self.offset = parent, offset
        self.continuity_class = parent.continuity_class

    @property
    def domain_lo(self) -> float:
        return self.parent.domain_lo

    @property
    def domain_hi(self) -> float:
        return self.parent.domain_hi

    def breakpoints(self) -> list[float]:
        return self.parent.breakpoints()

    def value_at(self, t, side="auto"):
        return self.parent.value_at(t, side) + self.offset

    def d1_at(self, t, side="auto"):
        return self.parent.d1_at(t, side)

    def d2_at(self, t, side="auto"):
        return self.parent.d2_at(t, side)


def _monotone_direction(p: ProfileLike, n_probe: int = 257) -> int:
    lo, hi = p.domain_lo, p.domain_hi
    if math.isinf(hi):
        hi = max(10.0 * max(1.0, lo), lo + 10.0)
    ts = np.linspace(lo, hi, n_probe)
    ts = np.unique(np.concatenate([ts, [b for b in p.breakpoints() if lo <= b <= hi]]))
    sign = 0
    brk = set(p.breakpoints())
    endpoints = (ts[0], ts[-1])
    for t in ts:
        for side in ("left", "right") if t in brk else ("auto",):
            d = p.d1_at(float(t), side)
            if not math.isfinite(d):
                continue
            if d == 0.0:
                if t in endpoints:
                    continue
                raise NotMonotone(f"derivative vanishes at t={t!r}")
            s = 1 if d > 0 else -1
            if sign == 0:
                sign = s
            elif s != sign:
                raise NotMonotone(f"derivative changes sign near t={t!r}")
    if sign == 0:
        raise NotMonotone("profile is constant")
    return sign


def invert_monotone(p: ProfileLike, u: float, tol: float | None = None) -> float:
    """Solve ``p(t) = u`` for a strictly monotone profile.

    Bisection to a bracket, then safeguarded Newton; ``tol`` defaults to
    ``1e-12 * max(1, |u|)``.  The derivative of the inverse is ``1/p'(t)``
    (0 where ``p'`` is infinite); use :class:`MonotoneInverseSegment` for a
    persistent inverse profile.
    """
    if tol is None:
        tol = 1e-12 * max(1.0, abs(u))
    sign = _monotone_direction(p)
    lo, hi = p.domain_lo, p.domain_hi
    if math.isinf(hi):
        # expand until the target value is bracketed
        hi = max(1.0, lo + 1.0)
        for _ in range(200):
            try:
                v = p.value_at(hi)
            except OutOfDomain:
                break
            if (v - u) * sign >= 0.0:
                break
            hi = 2.0 * hi + 1.0
        else:
            raise OutOfRange(f"u={u!r} not bracketed")
    vlo = p.value_at(lo, "right")
    vhi = p.value_at(hi, "left")
    umin, umax = min(vlo, vhi), max(vlo, vhi)
    if u < umin - tol or u > umax + tol:
        raise OutOfRange(f"u={u!r} outside range [{umin!r}, {umax!r}]")
    u = min(max(u, umin), umax)
    a, b = lo, hi
    t = 0.5 * (a + b)
    for _ in range(300):
        vt = p.value_at(t)
        err = vt - u
        if abs(err) <= tol:
            return t
        if err * sign > 0.0:
            b = t
        else:
            a = t
        dp = p.d1_at(t)
        tn = t - err / dp if (dp != 0.0 and math.isfinite(dp)) else 0.5 * (a + b)
        if not (a < tn < b):
            tn = 0.5 * (a + b)
        if tn == t:
            return t
        t = tn
    return t


def _assert_positive(p: ProfileLike, n_probe: int = 65) -> None:
    lo, hi = p.domain_lo, p.domain_hi
    if math.isinf(hi):
        hi = max(10.0 * max(1.0, lo), lo + 10.0)
    ts = list(np.linspace(lo, hi, n_probe)) + \
        [b for b in p.breakpoints() if lo <= b <= hi]
    for t in ts:
        if p.value_at(float(t)) <= 0.0:
            raise NotPositive(f"profile not positive at t={t!r}")


def theta_of_f(f: ProfileLike) -> ThetaOfF:
    """Profile of ``theta`` with ``f(t)^2 = theta(t^2)``; requires ``f > 0``."""
    _assert_positive(f)
    return ThetaOfF(f)


def f_of_theta(theta: ProfileLike) -> FOfTheta:
    """Profile of ``f`` with ``f(t) = sqrt(theta(t^2))``; requires ``theta > 0``."""
    _assert_positive(theta)
    return FOfTheta(theta)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def profile_to_dict(p: RadialProfile) -> dict:
    hi = None if math.isinf(p.domain_hi) else p.domain_hi
    return {
        "domain": [p.domain_lo, hi],
        "continuity": p.continuity_class,
        "segments": [_segment_to_dict(s) for s in p.segments],
    }


def profile_from_dict(doc: dict) -> RadialProfile:
    segs = [_segment_from_dict(s) for s in doc["segments"]]
    return RadialProfile(segs, continuity_class=doc.get("continuity"))


def profile_to_json(p: RadialProfile, indent: int | None = 2) -> str:
    return json.dumps(profile_to_dict(p), indent=indent)


def profile_from_json(text: str) -> RadialProfile:
    return profile_from_dict(json.loads(text))


def profile_to_csv(p: ProfileLike, ts: Iterable[float]) -> str:
    """CSV trace with columns ``t, f, f', f'' (left), f'' (right)``."""
    lines = ["t,f,fp,fpp_left,fpp_right"]
    for t in ts:
        t = float(t)
        v = p.value_at(t)
        d1 = p.d1_at(t)
        l2 = p.d2_at(t, "left") if t in p.breakpoints() else p.d2_at(t)
        r2 = p.d2_at(t, "right") if t in p.breakpoints() else l2
        lines.append(f"{t!r},{v!r},{d1!r},{l2!r},{r2!r}")
    return "\n".join(lines) + "\n"
