"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import spline_profile
from handleforge import constructors as C
from handleforge import levi as L
from handleforge import profiles as P
from handleforge import pseudoconvexity as PC
from handleforge import smoothing as S

SEED = 42


def _report(num: int, name: str, ok: bool, detail: str = ""):
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'} - {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. closed-form complex Hessians match finite differences
# ---------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_rot = 0.0
    f = spline_profile(rng, lo=0.4, hi=2.2, band=(0.8, 1.3))
    theta = P.theta_of_f(f)
    field = L.rotational_field(theta)
    for n in (2, 4):
        done = 0
        while done < 50:
            x = rng.normal(size=n)
            x *= rng.uniform(0.7, 1.4) / np.linalg.norm(x)
            y = rng.normal(size=n)
            y *= rng.uniform(0.2, 1.0) / np.linalg.norm(y)
            s = float(x @ x)
            if min(abs(s - b) for b in theta.breakpoints()) < 2e-3:
                continue
            done += 1
            bp = L.BoundaryPoint(x, y)
            H = L.rotational_hessian(theta, bp)
            fd = L.fd_hessian(field, bp.flat(), step=2e-4)
            worst_rot = max(worst_rot, float(np.max(np.abs(fd.H - H))))

    q = C.build_quadratic_handle([[2.0]], [[1.0]], 1.0, 0.5,
                                 C.BuildOptions(n_grid=300))
    fieldq = q.tau_field()
    worst_quad = 0.0
    done = 0
    while done < 100:
        x, y, u, v = (rng.normal(size=1) * 1.2, rng.normal(size=1),
                      rng.normal(size=1), rng.normal(size=1))
        s = float(x @ x)
        if min(abs(s - b) for b in q.h.breakpoints()) < 1e-2:
            continue
        done += 1
        bp = L.BoundaryPoint(x, y, u, v)
        H = L.quadratic_tau_hessian(q, bp)
        fd = L.fd_hessian(fieldq, bp.flat(), step=2e-4)
        worst_quad = max(worst_quad, float(np.max(np.abs(fd.H - H))))
    elapsed = time.perf_counter() - t0
    ok = worst_rot < 1e-7 and worst_quad < 1e-7 and elapsed < 5.0
    _report(1, "closed-form Hessians match the FD oracle", ok,
            f"rotational {worst_rot:.2e}, quadratic {worst_quad:.2e}, "
            f"{elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. equivalence of the theta-form and f-form systems
# ---------------------------------------------------------------------------


def test_criterion_2_change_of_variables_equivalence():
    rng = np.random.default_rng(SEED)
    disagreements = 0
    worst_rel = 0.0
    n_checked = 0
    for _ in range(200):
        f = spline_profile(rng)
        theta = P.theta_of_f(f)
        for t in np.linspace(0.55, 1.95, 100):
            t = float(t)
            fr = PC.f_condition(f, t).sides[0].records
            tr = PC.theta_condition(theta, t * t).sides[0].records
            v = f.value_at(t)
            # theta-prime margin == slope margin; curvature margins
            # relate by the factor f^2
            pairs = ((tr[0].margin, fr[1].margin),
                     (tr[1].margin, v * v * fr[0].margin))
            for a, b in pairs:
                rel = abs(a - b) / max(1.0, abs(a), abs(b))
                worst_rel = max(worst_rel, rel)
            strict_f = fr[0].margin > 0 and fr[1].margin > 0
            strict_t = tr[0].margin > 0 and tr[1].margin > 0
            rev_f = fr[0].margin < 0 and fr[1].margin < 0
            rev_t = tr[0].margin < 0 and tr[1].margin < 0
            if strict_f != strict_t or rev_f != rev_t:
                disagreements += 1
            n_checked += 1
    ok = disagreements == 0 and worst_rel <= 1e-10 and n_checked == 20000
    _report(2, "theta-form and f-form verdicts identical", ok,
            f"{n_checked} points, {disagreements} disagreements, "
            f"margin transport error {worst_rel:.2e}")


# ---------------------------------------------------------------------------
# 3. inequality <=> restricted Levi sign dichotomy
# ---------------------------------------------------------------------------


def test_criterion_3_levi_sign_dichotomy():
    rng = np.random.default_rng(SEED)
    thetas = [
        P.RadialProfile([P.PolySegment(0.0, math.inf, (1.0, 0.5))]),
        P.RadialProfile([P.PolySegment(0.0, math.inf, (1.0, 2.0))]),
        P.RadialProfile([P.PolySegment(0.0, math.inf, (1.0, 0.5, 0.01))]),
    ]
    exceptions = 0
    rows_total = 0
    for theta in thetas:
        for n in (2, 4):
            s_vals = np.linspace(0.2, 4.0, 50)
            rows = PC.levi_dichotomy_check(theta, s_vals, n, 20, rng)
            rows_total += len(rows)
            exceptions += sum(not r.agree for r in rows)
            # every radius of these profiles is strictly one-sided
            assert all(r.verdict_strict or r.verdict_reverse for r in rows)
    ok = exceptions == 0
    _report(3, "strict pair <=> positive spectrum, reversed <=> negative",
            ok, f"{rows_total} radii x 20 points, {exceptions} exceptions")


# ---------------------------------------------------------------------------
# 4. conic profile identities
# ---------------------------------------------------------------------------


def test_criterion_4_conic_identities():
    worst_resid = 0.0
    min_margin = math.inf
    for lam in (-1.0, 0.5, 2.0, 5.0):
        g = P.sqrt_quadratic(lam, 1.0)
        # clip to the float-representable part of the domain: the curvature
        # sum cancels catastrophically as g -> 0 at the bounded domain edge
        hi = min(10.0, g.domain_hi * 0.999)
        for t in np.linspace(0.1, hi, 1000):
            t = float(t)
            v, d1, d2 = g.value_at(t), g.d1_at(t), g.d2_at(t)
            worst_resid = max(worst_resid,
                              abs(v * (d2 + d1 ** 3 / (lam * t)) - lam))
            rep = PC.f_condition(g, t)
            m = rep.margin_minus if lam < 1.0 else rep.margin_plus
            min_margin = min(min_margin, m)
    ok = worst_resid < 1e-10 and min_margin > 0.0
    _report(4, "conic ODE residual and one-sided systems", ok,
            f"max residual {worst_resid:.2e}, min margin {min_margin:.3e}")


# ---------------------------------------------------------------------------
# 5. outer handle end to end
# ---------------------------------------------------------------------------


def test_criterion_5_outer_end_to_end():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    h = C.build_outer_handle(2.0, 1.0, 0.5, C.BuildOptions(relax=True))
    cns = h.constants

    # defining equations, sigma in log-domain
    eq_c = abs(cns["c"] - (cns["gp_eps"] - 0.5 * cns["gpp_eps"]))
    eq_c1 = abs(cns["c1"] - (cns["c"] + cns["eta"] * cns["gpp_eps"]))
    eq_sigma = abs(cns["c1"] + cns["eta"] * (math.log(cns["eta"] / 2.0)
                                             - cns["log_sigma"]) - 2.0)
    constants_ok = max(eq_c, eq_c1, eq_sigma) <= 1e-10

    g = P.sqrt_quadratic(2.0, 1.0)
    shared_ok = all(h.f.value_at(float(t)) == g.value_at(float(t))
                    for t in np.linspace(0.5, 5.0, 100))
    below_ok = all(h.f.value_at(float(t)) < g.value_at(float(t))
                   for t in np.linspace(h.sigma * 1.01, 0.5, 1000,
                                        endpoint=False))

    m9 = h.certification["f_system"]["min_margin"]
    m8 = h.certification["inverse_system"]["min_margin"]
    margins_ok = m9 > 0.0 and m8 > 0.0

    # Cor 3.2 containment on 1e5 samples in a box of radius 10 (n = 2),
    # plus deterministic probes of the axis cylinder |x| <= sigma
    pts = rng.uniform(-10.0, 10.0, size=(100_000, 4))
    nx = np.linalg.norm(pts[:, :2], axis=1)
    ny = np.linalg.norm(pts[:, 2:], axis=1)
    f_lo = h.f.domain_lo
    fvals = np.array([h.f.value_at(float(t)) if t >= f_lo else math.nan
                      for t in nx])
    in_K = (nx <= h.sigma) | (ny >= fvals)
    in_D = ny ** 2 >= 2.0 * nx ** 2 + 1.0
    lower_viol = int(np.sum((in_D | (nx <= h.sigma)) & ~in_K))
    upper_viol = int(np.sum(in_K & ~(in_D | (nx < h.eps))))
    axis_ok = all(h.membership_norms(0.5 * h.sigma, float(yv)) <= 0.0
                  for yv in np.linspace(0.0, 10.0, 64))
    # the membership operator agrees with the fast predicate on a subsample
    agree = all((h.membership_norms(float(nx[i]), float(ny[i])) <= 0.0)
                == bool(in_K[i]) for i in range(0, 100_000, 97))
    containment_ok = (lower_viol == 0 and upper_viol == 0 and axis_ok
                      and agree)

    elapsed = time.perf_counter() - t0
    ok = (constants_ok and shared_ok and below_ok and margins_ok
          and containment_ok and elapsed < 30.0)
    _report(5, "outer handle lam=2, eps=0.5, relax", ok,
            f"eq {max(eq_c, eq_c1, eq_sigma):.1e}, margins ({m9:.3g}, "
            f"{m8:.3g}), containment {lower_viol}/{upper_viol} violations, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 6. inner handles end to end
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("lam", [-1.0, 0.0, 0.5])
def test_criterion_6_inner_end_to_end(lam):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    h = C.build_inner_handle(lam, 0.5)
    m8 = h.certification["f_system"]["min_margin"]
    margins_ok = m8 > 0.0 and h.passed

    g = P.sqrt_quadratic(lam, 1.0)
    above = []
    for t in np.linspace(max(h.sigma * 1.01, h.f.domain_lo), 0.5, 1000,
                         endpoint=False):
        t = float(t)
        if t <= h.f.domain_lo:
            continue
        above.append(h.f.value_at(t) > g.value_at(t))
    above_ok = above and all(above)

    # L containment: D u iR^n inside L inside D u {|x| < eps}
    pts = rng.uniform(-10.0, 10.0, size=(100_000, 4))
    nx = np.linalg.norm(pts[:, :2], axis=1)
    ny = np.linalg.norm(pts[:, 2:], axis=1)
    in_L = np.array([h.membership_norms(float(a), float(b)) <= 1e-12
                     for a, b in zip(nx, ny)])
    in_D = ny ** 2 <= lam * nx ** 2 + 1.0
    lower_viol = int(np.sum(in_D & ~in_L))
    upper_viol = int(np.sum(in_L & ~(in_D | (nx < h.eps))))
    axis_ok = all(h.membership_norms(0.0, float(yv)) <= 0.0
                  for yv in np.linspace(0.0, 10.0, 64))
    elapsed = time.perf_counter() - t0
    ok = (margins_ok and above_ok and lower_viol == 0 and upper_viol == 0
          and axis_ok and elapsed < 30.0)
    _report(6, f"inner handle lam={lam}, eps=0.5", ok,
            f"margin {m8:.3g}, containment {lower_viol}/{upper_viol} "
            f"violations, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 7. quadratic model end to end
# ---------------------------------------------------------------------------


def test_criterion_7_quadratic_end_to_end():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    q = C.build_quadratic_handle([[2.0]], [[1.0]], 1.0, 0.5)

    # independent re-derivation of c0 = R - h(R)
    hR = q.delta * q.R + q.mu * (math.sqrt(q.R) - math.sqrt(q.t0)) ** 2
    c0_ok = (abs(q.c0 - 3.03576) < 1e-4
             and abs(q.c0 - (q.R - hR)) < 1e-12 * q.R)

    # middle identity, exact before smoothing
    resid = max(abs(2.0 * float(t) * q.h_raw.d2_at(float(t))
                    + q.h_raw.d1_at(float(t)) - (q.mu + q.delta))
                for t in np.linspace(q.t0, q.R, 100)[1:-1])
    identity_ok = resid <= 1e-10

    # min Levi eigenvalue of tau over 1e4 points with |x|^2 in [0, 2R]
    v1 = np.linalg.eigh(np.asarray(q.A))[1][:, 0]
    min_eig = math.inf
    for s in np.linspace(0.0, 2.0 * q.R, 10_000):
        x = math.sqrt(float(s)) * v1
        p = L.BoundaryPoint(x, np.zeros(q.k), np.zeros(q.n - q.k),
                            np.zeros(q.n - q.k))
        H = L.quadratic_tau_hessian(q, p)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(H)[0]))
    eig_ok = min_eig > 0.0

    # containment (iii) on 1e5 samples plus the handle plane
    pts = rng.uniform(-10.0, 10.0, size=(100_000, 4))
    tau = np.empty(100_000)
    rho = np.empty(100_000)
    Qv = np.empty(100_000)
    for i in range(100_000):
        x, y, u, v = pts[i, :1], pts[i, 1:2], pts[i, 2:3], pts[i, 3:4]
        Qv[i] = q.Q(y, u, v)
        rho[i] = Qv[i] - float(x @ x)
        tau[i] = Qv[i] - q.h.value_at(float(x @ x))
    in_T = tau <= 0.0
    lower_viol = int(np.sum((rho <= -q.c0) & ~in_T))
    upper_viol = int(np.sum(in_T & ~((rho < -q.r) | (Qv < q.eps))))
    xs = rng.uniform(-math.sqrt(2 * q.R), math.sqrt(2 * q.R), size=5000)
    plane_viol = sum(1 for x in xs
                     if q.tau([float(x)], [0.0], [0.0], [0.0]) > 0.0)
    elapsed = time.perf_counter() - t0
    ok = (c0_ok and identity_ok and eig_ok and lower_viol == 0
          and upper_viol == 0 and plane_viol == 0 and elapsed < 30.0)
    _report(7, "quadratic cap k=1, n=2, A=diag(2), B=diag(1)", ok,
            f"c0 {q.c0:.6f}, identity {resid:.1e}, min eig {min_eig:.4f}, "
            f"containment {lower_viol}/{upper_viol}/{plane_viol}, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 8. degenerate curvature ODE and the weakly pseudoconvex spectrum
# ---------------------------------------------------------------------------


def test_criterion_8_degenerate_ode():
    def rhs(t, z):
        f, fp = z
        return [fp, 1.0 / f - fp ** 3 / t]

    kw = dict(method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    fwd = solve_ivp(rhs, (1.0, 1.35), [1.0, 0.2], **kw)
    bwd = solve_ivp(rhs, (1.0, 0.75), [1.0, 0.2], **kw)
    assert fwd.success and bwd.success

    def fval(t):
        return float((bwd if t < 1.0 else fwd).sol(t)[0])

    def fp(t):
        return float((bwd if t < 1.0 else fwd).sol(t)[1])

    def fpp(t):
        return 1.0 / fval(t) - fp(t) ** 3 / t

    f = P.CallableProfile(fval, fp, fpp, (0.75, 1.35))

    # honest residual: second derivative from differences of f'
    hstep = 1e-6
    resid = max(abs(fval(t) * ((fp(t + hstep) - fp(t - hstep))
                               / (2 * hstep) + fp(t) ** 3 / t) - 1.0)
                for t in np.linspace(0.76, 1.34, 200))
    slope_ok = all(fval(t) * fp(t) / t < 1.0
                   for t in np.linspace(0.76, 1.34, 200))

    theta = P.theta_of_f(f)
    worst_zero = 0.0
    worst_pos = math.inf
    for n in (2, 4):
        for t in np.linspace(0.8, 1.3, 25):
            t = float(t)
            th = theta.value_at(t * t)
            # x . y = 0: one vanishing eigenvalue
            x = np.zeros(n)
            x[0] = t
            y = np.zeros(n)
            y[1] = math.sqrt(th)
            p = L.BoundaryPoint(x, y)
            spec = L.restricted_levi_spectrum(
                L.rotational_hessian(theta, p),
                L.tangent_frame(L.rotational_gradient(theta, p)))
            worst_zero = max(worst_zero, abs(float(spec[0])))
            # x . y != 0: strictly positive spectrum
            y2 = np.zeros(n)
            y2[0] = 0.6 * math.sqrt(th)
            y2[1] = 0.8 * math.sqrt(th)
            p2 = L.BoundaryPoint(x, y2)
            spec2 = L.restricted_levi_spectrum(
                L.rotational_hessian(theta, p2),
                L.tangent_frame(L.rotational_gradient(theta, p2)))
            worst_pos = min(worst_pos, float(spec2[0]))
    ok = (resid < 1e-8 and slope_ok and worst_zero <= 1e-6
          and worst_pos > 1e-10)
    _report(8, "degenerate ODE: zero mode on x.y=0, positive off it", ok,
            f"residual {resid:.1e}, |zero mode| {worst_zero:.1e}, "
            f"min positive {worst_pos:.2e}")


# ---------------------------------------------------------------------------
# 9. smoothing preserves margins at the default radius
# ---------------------------------------------------------------------------


def test_criterion_9_smoothing_safety(outer_relaxed, inner_half,
                                      quadratic_example):
    reports = []

    def check(name, raw, condition, interval, lam1=None):
        base = S.reverify(raw, condition, interval, 800, lam1=lam1)
        radius = S.default_radius(raw)
        res = S.mollify_breakpoints(raw, radius)
        rep = S.reverify(res.profile, condition, interval, 800, lam1=lam1,
                         baseline_margin=base.min_margin)
        loss = max(rep.margin_loss, 0.0)
        ok = rep.passed and loss < 0.10 * abs(base.min_margin) + 1e-15
        reports.append((name, ok, base.min_margin, loss))
        return ok

    h = outer_relaxed
    u_cap = h.f.value_at(1.0)
    ivo = C.inverse_certification_interval(h.f_inverse_raw, u_cap, False)
    ok1 = check("outer inverse", h.f_inverse_raw, PC.Condition.INEQ8, ivo)

    hi = inner_half
    ivi = C.inverse_certification_interval(
        hi.f_inverse_raw, 2.0 * hi.constants["g_eps"], True)
    ok2 = check("inner inverse", hi.f_inverse_raw, PC.Condition.INEQ8, ivi)

    q = quadratic_example
    ok3 = check("quadratic cap", q.h_raw, PC.Condition.CAP,
                (0.0, 2.0 * q.R), lam1=q.lam1)

    detail = "; ".join(f"{n}: margin {m:.3g}, loss {l:.2e}"
                       for n, _, m, l in reports)
    _report(9, "post-mollification margin loss under 10%",
            ok1 and ok2 and ok3, detail)
