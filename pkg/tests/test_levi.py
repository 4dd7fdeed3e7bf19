import math

import numpy as np
import pytest

from conftest import spline_profile
from handleforge import errors
from handleforge import levi as L
from handleforge import profiles as P

CONST_ONE = P.RadialProfile([P.PolySegment(0.0, math.inf, (1.0,))])


def affine_theta(lam, a=1.0):
    return P.RadialProfile([P.PolySegment(0.0, math.inf, (a, lam))])


class TestGradient:
    def test_axis_point(self):
        p = L.BoundaryPoint(np.zeros(3), np.array([1.0, 0.0, 0.0]))
        g = L.rotational_gradient(CONST_ONE, p)
        assert np.allclose(g, [-1j, 0, 0])

    def test_affine_substitution(self):
        th = affine_theta(2.0)
        y1 = 0.4
        y2 = math.sqrt(3.0 - y1 ** 2)
        p = L.BoundaryPoint(np.array([1.0, 0.0]), np.array([y1, y2]))
        g = L.rotational_gradient(th, p)
        assert g[0] == pytest.approx(-2.0 - 1j * y1)

    def test_fd_oracle_on_spline(self, rng):
        f = spline_profile(rng, lo=0.4, hi=2.2, band=(0.8, 1.3))
        theta = P.theta_of_f(f)
        field = L.rotational_field(theta)
        done = 0
        while done < 10:
            x = rng.normal(size=2)
            x *= rng.uniform(0.8, 1.3) / np.linalg.norm(x)
            y = rng.normal(size=2)
            y *= rng.uniform(0.2, 1.0) / np.linalg.norm(y)
            s = float(x @ x)
            if min(abs(s - b) for b in theta.breakpoints()) < 1e-3:
                continue
            done += 1
            p = np.concatenate([x, y])
            h = 1e-5
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                fd = (field(p + e) - field(p - e)) / (2 * h)
                # gradient of rho in real coords vs complex gradient
                bp = L.BoundaryPoint(x, y)
                g = L.rotational_gradient(theta, bp)
                # rho_x = 2 Re rho_z ; rho_y = -2 Im rho_z
                want = 2 * g[i].real if i < 2 else -2 * g[i - 2].imag
                assert fd == pytest.approx(want, abs=1e-8)


class TestHessian:
    def test_constant_theta(self):
        p = L.BoundaryPoint(np.array([0.3, -0.1]), np.array([0.9, 0.2]))
        H = L.rotational_hessian(CONST_ONE, p)
        assert np.allclose(H, np.eye(2) / 2)

    def test_pluriharmonic(self):
        ident = P.RadialProfile([P.PolySegment(0.0, math.inf, (0.0, 1.0))])
        p = L.BoundaryPoint(np.array([0.7, 0.4]), np.array([0.5, 0.6]))
        H = L.rotational_hessian(ident, p)
        assert np.max(np.abs(H)) < 1e-14

    def test_affine_theta_sign_convention(self):
        for lam in (0.5, 2.0):
            th = affine_theta(lam)
            p = L.BoundaryPoint(np.array([1.0, 0.3]), np.array([0.2, 1.1]))
            H = L.rotational_hessian(th, p)
            assert np.allclose(H, (1.0 - lam) / 2.0 * np.eye(2))

    def test_hermitian_and_fd(self, rng):
        # Richardson pair (2e-4, 1e-4): refinement step 1e-4, roundoff at bay
        f = spline_profile(rng, lo=0.4, hi=2.2, band=(0.8, 1.3))
        theta = P.theta_of_f(f)
        field = L.rotational_field(theta)
        worst = 0.0
        done = 0
        while done < 20:
            x = rng.normal(size=2)
            x *= rng.uniform(0.8, 1.3) / np.linalg.norm(x)
            y = rng.normal(size=2)
            y *= rng.uniform(0.2, 1.0) / np.linalg.norm(y)
            s = float(x @ x)
            if min(abs(s - b) for b in theta.breakpoints()) < 2e-3:
                continue
            done += 1
            bp = L.BoundaryPoint(x, y)
            H = L.rotational_hessian(theta, bp)
            assert L.hermitian_defect(H) <= 1e-12
            fd = L.fd_hessian(field, bp.flat(), step=2e-4)
            worst = max(worst, float(np.max(np.abs(fd.H - H))))
        assert worst < 1e-7


class TestTangentFrame:
    def test_standard_basis(self):
        F = L.tangent_frame(np.array([1.0, 0, 0, 0], dtype=complex))
        # spans {e2, e3, e4}
        assert F.shape == (4, 3)
        assert np.max(np.abs(F[0, :])) < 1e-12

    def test_imaginary_direction(self):
        F = L.tangent_frame(np.array([0.0, -1j, 0.0], dtype=complex))
        assert np.max(np.abs(F[1, :])) < 1e-12

    def test_random_frames(self, rng):
        for n in (2, 3, 5):
            for _ in range(20):
                g = rng.normal(size=n) + 1j * rng.normal(size=n)
                F = L.tangent_frame(g)
                gram = F.conj().T @ F
                assert np.max(np.abs(gram - np.eye(n - 1))) < 1e-12
                assert np.max(np.abs(g @ F)) < 1e-12

    def test_singular(self):
        with pytest.raises(errors.SingularPoint):
            L.tangent_frame(np.zeros(3, dtype=complex))


class TestRestrictedSpectrum:
    def test_constant_theta_half(self):
        for n in (2, 4):
            p = L.BoundaryPoint(np.zeros(n),
                                np.eye(n)[0])
            H = L.rotational_hessian(CONST_ONE, p)
            F = L.tangent_frame(L.rotational_gradient(CONST_ONE, p))
            spec = L.restricted_levi_spectrum(H, F)
            assert np.allclose(spec, 0.5)

    def test_pluriharmonic_zero(self, rng):
        ident = P.RadialProfile([P.PolySegment(0.0, math.inf, (0.0, 1.0))])
        for _ in range(5):
            x = rng.normal(size=3)
            y = rng.normal(size=3)
            y *= math.sqrt(float(x @ x)) / np.linalg.norm(y)
            p = L.BoundaryPoint(x, y)
            H = L.rotational_hessian(ident, p)
            F = L.tangent_frame(L.rotational_gradient(ident, p))
            assert np.max(np.abs(L.restricted_levi_spectrum(H, F))) < 1e-12

    def test_affine_sign_flip(self):
        for lam, sign in ((0.5, 1.0), (2.0, -1.0)):
            th = affine_theta(lam)
            y2 = math.sqrt(lam + 1.0)
            p = L.BoundaryPoint(np.array([1.0, 0.0]), np.array([0.0, y2]))
            H = L.rotational_hessian(th, p)
            F = L.tangent_frame(L.rotational_gradient(th, p))
            spec = L.restricted_levi_spectrum(H, F)
            assert np.all(sign * spec > 0)

    def test_rotational_invariance(self, rng):
        f = spline_profile(rng, lo=0.4, hi=2.2)
        theta = P.theta_of_f(f)
        for n in (2, 4):
            for _ in range(10):
                x = rng.normal(size=n)
                x *= 1.0 / np.linalg.norm(x)
                th_val = theta.value_at(float(x @ x))
                y = rng.normal(size=n)
                y *= math.sqrt(th_val) / np.linalg.norm(y)
                p = L.BoundaryPoint(x, y)
                O = np.linalg.qr(rng.normal(size=(n, n)))[0]
                q = L.BoundaryPoint(O @ x, O @ y)
                s1 = L.restricted_levi_spectrum(
                    L.rotational_hessian(theta, p),
                    L.tangent_frame(L.rotational_gradient(theta, p)))
                s2 = L.restricted_levi_spectrum(
                    L.rotational_hessian(theta, q),
                    L.tangent_frame(L.rotational_gradient(theta, q)))
                assert np.max(np.abs(s1 - s2)) < 1e-10


class TestCanonicalValue:
    def test_zero_vector(self):
        assert L.canonical_levi_value(CONST_ONE, 0.0, 0.0, 1.0, 0.0,
                                      np.zeros(0)) == 0.0

    def test_constant_theta(self):
        v = L.canonical_levi_value(CONST_ONE, 0.0, 0.0, 1.0, 1.0, np.zeros(0))
        assert v == pytest.approx(1.0)

    def test_affine_line_case(self):
        th = affine_theta(2.0)
        v = L.canonical_levi_value(th, 1.0, 0.0, math.sqrt(3.0), 1.0,
                                   np.zeros(0))
        assert v == pytest.approx(-7.0, rel=1e-12)

    def test_matches_matrix_form(self, rng):
        f = spline_profile(rng, lo=0.4, hi=2.2)
        theta = P.theta_of_f(f)
        for n in (2, 4):
            for _ in range(25):
                x1 = rng.uniform(0.8, 1.3)
                th_val = theta.value_at(x1 * x1)
                phi = rng.uniform(0.0, 2.0 * math.pi)
                y1 = math.sqrt(th_val) * math.cos(phi)
                y2 = math.sqrt(th_val) * math.sin(phi)
                lam_c = rng.normal() + 1j * rng.normal()
                v_pp = rng.normal(size=n - 2) + 1j * rng.normal(size=n - 2)
                val = L.canonical_levi_value(theta, x1, y1, y2, lam_c, v_pp)
                x = np.zeros(n); x[0] = x1
                y = np.zeros(n); y[0], y[1] = y1, y2
                p = L.BoundaryPoint(x, y)
                H = L.rotational_hessian(theta, p)
                v = L.canonical_tangent_vector(theta, x1, y1, y2, lam_c, v_pp)
                quad = 2.0 * float(np.real(np.vdot(v, H @ v)))
                assert abs(val - quad) <= 1e-10 * max(1.0, abs(val),
                                                      abs(quad))

    def test_membership_enforced(self):
        with pytest.raises(errors.NotOnHypersurface):
            L.canonical_levi_value(CONST_ONE, 0.0, 1.0, 1.0, 1.0, np.zeros(0))


class TestFDHessian:
    def test_norm_y_squared(self, rng):
        # exact up to the second-difference roundoff floor (~eps/step^2)
        p = rng.normal(size=6)
        fd = L.fd_hessian(lambda xy: float(xy[3:] @ xy[3:]), p)
        assert np.max(np.abs(fd.H - np.eye(3) / 2)) < 1e-7

    def test_pluriharmonic_field(self, rng):
        p = rng.normal(size=4)
        fd = L.fd_hessian(lambda xy: float(xy[:2] @ xy[:2] - xy[2:] @ xy[2:]),
                          p)
        assert np.max(np.abs(fd.H)) < 1e-7

    def test_truncation_estimate_reported(self, rng):
        p = rng.normal(size=4)
        fd = L.fd_hessian(lambda xy: math.cos(float(xy.sum())), p)
        assert math.isfinite(fd.truncation_estimate)


class TestQuadraticTauHessian:
    def test_flat_piece(self, quadratic_example):
        q = quadratic_example
        p = L.BoundaryPoint(np.array([0.2]), np.array([0.0]),
                            np.array([0.0]), np.array([0.0]))
        H = L.quadratic_tau_hessian(q, p)
        # z-block (A - delta I)/2, w-block (B + I)/2
        assert H[0, 0] == pytest.approx((2.0 - q.delta) / 2.0, rel=1e-12)
        assert H[1, 1] == pytest.approx(1.0, rel=1e-12)
        assert abs(H[0, 1]) == 0.0

    def test_middle_piece_bound(self, quadratic_example):
        q = quadratic_example
        lam1, mu, delta = q.lam1, q.mu, q.delta
        for s in np.linspace(q.t0 * 1.05, q.R * 0.95, 50):
            p = L.BoundaryPoint(np.array([math.sqrt(float(s))]),
                                np.array([0.0]), np.array([0.0]),
                                np.array([0.0]))
            H = L.quadratic_tau_hessian(q, p)
            eig = float(np.linalg.eigvalsh(H)[0])
            assert eig >= (lam1 - mu - delta) / 2.0 - 1e-8

    def test_fd_oracle(self, rng, quadratic_example):
        q = quadratic_example
        field = q.tau_field()
        worst = 0.0
        done = 0
        while done < 20:
            x, y, u, v = (rng.normal(size=1) * 1.2, rng.normal(size=1),
                          rng.normal(size=1), rng.normal(size=1))
            s = float(x @ x)
            # stay clear of the cap joints by 10 steps
            if min(abs(s - b) for b in q.h.breakpoints()) < 1e-2:
                continue
            done += 1
            bp = L.BoundaryPoint(x, y, u, v)
            H = L.quadratic_tau_hessian(q, bp)
            fd = L.fd_hessian(field, bp.flat(), step=2e-4)
            worst = max(worst, float(np.max(np.abs(fd.H - H))))
        assert worst < 1e-7

    def test_shape_errors(self, quadratic_example):
        q = quadratic_example
        with pytest.raises(errors.ShapeError):
            L.quadratic_tau_hessian(
                q, L.BoundaryPoint(np.array([0.1, 0.2]), np.zeros(2)))
