"""Complex gradients, complex Hessians and restricted Levi spectra.

Wirtinger convention (fixed once, used everywhere): for ``z_j = x_j + i y_j``,

    d/dz_j    = (d/dx_j - i d/dy_j) / 2,
    d/dzbar_k = (d/dx_k + i d/dy_k) / 2,

so the complex Hessian of a real field ``rho`` assembles from real second
partials as

    rho_{z_j zbar_k} = (rho_{x_j x_k} + rho_{y_j y_k}) / 4
                       + i (rho_{x_j y_k} - rho_{y_j x_k}) / 4.

For the rotationally invariant field ``rho(x+iy) = |y|^2 - theta(|x|^2)`` the
closed forms are

    rho_{z_k}        = -(x_k theta' + i y_k),
    rho_{z_k zbar_k} = (1 - theta' - 2 x_k^2 theta'') / 2,
    rho_{z_j zbar_k} = -x_j x_k theta''          (j != k),

with ``theta`` and derivatives evaluated at ``s = |x|^2``.  The restricted
Levi form is the Hermitian form on the complex tangent space
``{v : sum_k rho_{z_k} v_k = 0}`` of the level hypersurface; its spectrum
decides the strongly pseudoconvex side.

Real points are column blocks ``(x, y)`` (and ``(u, v)`` for the split
quadratic model); flattened real vectors use the layout
``[x..., y...]`` resp. ``[x..., y..., u..., v...]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotOnHypersurface, OutOfDomain, ShapeError, SingularPoint
from .profiles import ProfileLike

__all__ = [
    "BoundaryPoint",
    "FDHessian",
    "rotational_field",
    "rotational_gradient",
    "rotational_hessian",
    "tangent_frame",
    "restricted_levi_spectrum",
    "canonical_levi_value",
    "canonical_tangent_vector",
    "fd_hessian",
    "quadratic_tau_hessian",
    "hermitian_defect",
    "sample_hypersurface_points",
]

MEMBERSHIP_RTOL = 1e-10


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of C^n (or of the split model C^k x C^{n-k}).

    ``x + i y`` are the first-block coordinates; ``u + i v`` the optional
    w-block of the quadratic model.
    """

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray | None = None
    v: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x.shape != self.y.shape:
            raise ShapeError("x and y must have equal length")
        if (self.u is None) != (self.v is None):
            raise ShapeError("u and v must be given together")
        if self.u is not None:
            object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
            object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
            if self.u.shape != self.v.shape:
                raise ShapeError("u and v must have equal length")

    @property
    def n(self) -> int:
        return self.x.size + (0 if self.u is None else self.u.size)

    def flat(self) -> np.ndarray:
        """Flat real vector in the FD layout: all real parts, then all
        imaginary parts (``[x, u, y, v]`` for the split model)."""
        if self.u is None:
            return np.concatenate([self.x, self.y])
        return np.concatenate([self.x, self.u, self.y, self.v])

    def on_hypersurface(self, theta: ProfileLike,
                        rtol: float = MEMBERSHIP_RTOL) -> bool:
        s = float(self.x @ self.x)
        th = theta.value_at(s)
        lhs = float(self.y @ self.y)
        return abs(lhs - th) <= rtol * max(1.0, abs(lhs), abs(th))


def rotational_field(theta: ProfileLike) -> Callable[[np.ndarray], float]:
    """``rho`` as a flat-vector field ``[x..., y...] -> |y|^2 - theta(|x|^2)``."""

    def rho(xy: np.ndarray) -> float:
        xy = np.asarray(xy, dtype=float)
        n = xy.size // 2
        x, y = xy[:n], xy[n:]
        return float(y @ y) - theta.value_at(float(x @ x))

    return rho


def rotational_gradient(theta: ProfileLike, p: BoundaryPoint) -> np.ndarray:
    """Complex gradient ``(rho_{z_1}, ..., rho_{z_n})`` of the rotational field."""
    s = float(p.x @ p.x)
    d1 = theta.d1_at(s)
    return -(p.x * d1 + 1j * p.y)


def rotational_hessian(theta: ProfileLike, p: BoundaryPoint,
                       side: str = "auto") -> np.ndarray:
    """Complex Hessian of ``rho = |y|^2 - theta(|x|^2)`` at ``p``.

    At a breakpoint of ``theta''`` pass ``side`` to pick the one-sided limit.
    """
    s = float(p.x @ p.x)
    d1 = theta.d1_at(s, side)
    d2 = theta.d2_at(s, side)
    n = p.x.size
    H = (-d2) * np.outer(p.x, p.x).astype(complex)
    H[np.diag_indices(n)] += (1.0 - d1) / 2.0
    return H


def tangent_frame(grad: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of ``{v : sum_k grad_k v_k = 0}``.

    This is the Hermitian-orthogonal complement of ``conj(grad)``; each frame
    column annihilates the gradient functional to machine precision.
    """
    grad = np.asarray(grad, dtype=complex)
    norm = np.linalg.norm(grad)
    if norm == 0.0 or not np.isfinite(norm):
        raise SingularPoint("zero or non-finite complex gradient")
    _, _, vh = np.linalg.svd(grad[None, :] / norm)
    frame = vh[1:].conj().T
    return frame


def restricted_levi_spectrum(H: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the Levi form restricted to the frame."""
    H = np.asarray(H, dtype=complex)
    if H.shape[0] != H.shape[1] or frame.shape[0] != H.shape[0]:
        raise ShapeError("frame/Hessian dimension mismatch")
    M = frame.conj().T @ H @ frame
    return np.linalg.eigvalsh(M)


def canonical_tangent_vector(theta: ProfileLike, x1: float, y1: float,
                             y2: float, lam_coef: complex,
                             v_pp: np.ndarray) -> np.ndarray:
    """Tangent vector ``(-lam*i*y2, lam*(x1*theta' + i*y1), v'')`` at the
    reduced point ``p = (x1 + i y1, i y2, 0, ..., 0)``."""
    d1 = theta.d1_at(x1 * x1)
    v_pp = np.asarray(v_pp, dtype=complex)
    head = np.array([-lam_coef * 1j * y2,
                     lam_coef * (x1 * d1 + 1j * y1)], dtype=complex)
    return np.concatenate([head, v_pp])


def canonical_levi_value(theta: ProfileLike, x1: float, y1: float, y2: float,
                         lam_coef: complex, v_pp: np.ndarray,
                         side: str = "auto") -> float:
    """Twice the Levi form at the reduced point, by the closed formula

    ``2 L = |lam|^2 (-2 x1^2 y2^2 theta'' + (1-theta')(x1^2 theta'^2 + theta))
    + (1-theta') |v''|^2``.

    Must equal ``2 v* H v`` with ``H`` from :func:`rotational_hessian` and
    ``v`` from :func:`canonical_tangent_vector`.
    """
    s = x1 * x1
    th = theta.value_at(s, side)
    lhs = y1 * y1 + y2 * y2
    if abs(lhs - th) > MEMBERSHIP_RTOL * max(1.0, abs(lhs), abs(th)):
        raise NotOnHypersurface(
            f"y1^2 + y2^2 = {lhs!r} but theta(x1^2) = {th!r}")
    d1 = theta.d1_at(s, side)
    d2 = theta.d2_at(s, side)
    lam2 = abs(lam_coef) ** 2
    vpp2 = float(np.vdot(v_pp, v_pp).real)
    return (lam2 * (-2.0 * s * y2 * y2 * d2 + (1.0 - d1) * (s * d1 * d1 + th))
            + (1.0 - d1) * vpp2)


@dataclass(frozen=True)
class FDHessian:
    """Finite-difference complex Hessian with a truncation estimate."""

    H: np.ndarray
    truncation_estimate: float
    step: float


def _real_hessian(field: Callable[[np.ndarray], float], p: np.ndarray,
                  h: float) -> np.ndarray:
    m = p.size
    f0 = field(p)
    D = np.empty((m, m))
    E = np.eye(m) * h
    for i in range(m):
        D[i, i] = (field(p + 2 * E[i]) - 2.0 * f0 + field(p - 2 * E[i])) / (4 * h * h)
        for j in range(i + 1, m):
            val = (field(p + E[i] + E[j]) - field(p + E[i] - E[j])
                   - field(p - E[i] + E[j]) + field(p - E[i] - E[j])) / (4 * h * h)
            D[i, j] = D[j, i] = val
    return D


def fd_hessian(field: Callable[[np.ndarray], float], p: np.ndarray,
               step: float = 1e-4, richardson: bool = True) -> FDHessian:
    """Central-difference complex Hessian of a real field on ``R^{2n}``.

    ``field`` takes the flat layout ``[x..., y...]``.  With ``richardson``
    the step and half-step results are extrapolated; the returned truncation
    estimate is their disagreement / 3.
    """
    p = np.asarray(p, dtype=float)
    if p.size % 2:
        raise ShapeError("flat point must have even length (x and y blocks)")
    n = p.size // 2

    def assemble(h: float) -> np.ndarray:
        D = _real_hessian(field, p, h)
        dxx = D[:n, :n]
        dyy = D[n:, n:]
        dxy = D[:n, n:]
        return 0.25 * (dxx + dyy) + 0.25j * (dxy - dxy.T)

    H1 = assemble(step)
    if not richardson:
        return FDHessian(H1, math.nan, step)
    H2 = assemble(step / 2.0)
    est = float(np.max(np.abs(H2 - H1))) / 3.0
    return FDHessian((4.0 * H2 - H1) / 3.0, est, step)


def quadratic_tau_hessian(model, p: BoundaryPoint | np.ndarray,
                          side: str = "auto") -> np.ndarray:
    """Complex Hessian of ``tau(z, w) = Q(y, w) - h(|x|^2)``.

    Block form: z-block ``(A - h'(s) I)/2 - h''(s) x x^T`` with ``s = |x|^2``,
    w-block ``(B + I)/2``, vanishing cross blocks.  ``model`` provides ``A``,
    ``B`` and the cap profile ``h``.
    """
    if isinstance(p, BoundaryPoint):
        x = p.x
        k = x.size
        nw = 0 if p.u is None else p.u.size
    else:
        raise ShapeError("pass a BoundaryPoint with the (x, y | u, v) split")
    A = np.asarray(model.A, dtype=float)
    B = np.asarray(model.B, dtype=float)
    if A.shape != (k, k):
        raise ShapeError(f"A is {A.shape}, point has k={k}")
    if B.shape != (nw, nw):
        raise ShapeError(f"B is {B.shape}, point has n-k={nw}")
    s = float(x @ x)
    hd1 = model.h.d1_at(s, side)
    hd2 = model.h.d2_at(s, side)
    n = k + nw
    H = np.zeros((n, n), dtype=complex)
    H[:k, :k] = (A - hd1 * np.eye(k)) / 2.0 - hd2 * np.outer(x, x)
    if nw:
        H[k:, k:] = (B + np.eye(nw)) / 2.0
    return H


def hermitian_defect(H: np.ndarray) -> float:
    """Max absolute entry of ``H - H*`` (0 for an exactly Hermitian form)."""
    return float(np.max(np.abs(H - H.conj().T)))


def sample_hypersurface_points(theta: ProfileLike, s: float, n: int,
                               count: int, rng: np.random.Generator
                               ) -> list[BoundaryPoint]:
    """Random points of ``Sigma = {|y|^2 = theta(|x|^2)}`` at radius ``|x|^2 = s``."""
    th = theta.value_at(s)
    if th < 0.0:
        raise OutOfDomain("theta must be nonnegative on Sigma")
    pts = []
    for _ in range(count):
        ux = rng.normal(size=n)
        ux /= np.linalg.norm(ux)
        uy = rng.normal(size=n)
        uy /= np.linalg.norm(uy)
        pts.append(BoundaryPoint(math.sqrt(s) * ux, math.sqrt(th) * uy))
    return pts
