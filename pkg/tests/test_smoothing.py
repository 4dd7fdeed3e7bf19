import numpy as np
import pytest

from handleforge import errors
from handleforge import profiles as P
from handleforge import smoothing as S
from handleforge.pseudoconvexity import Condition


def abs_profile():
    return P.RadialProfile([P.PolySegment(-0.5, 0.0, (0.0, -1.0)),
                            P.PolySegment(0.0, 0.5, (0.0, 1.0))])


def curvature_jump_profile(d2_left=1.0, d2_right=4.0):
    # PolySegment stores Taylor coefficients: the quadratic one is d2/2
    s1 = P.PolySegment(0.0, 1.0, (1.0, 0.1, d2_left / 2.0))
    v, m = s1.value(1.0), s1.d1(1.0)
    s2 = P.PolySegment(1.0, 2.0, (v, m, d2_right / 2.0), center=1.0)
    return P.RadialProfile([s1, s2])


class TestMollify:
    def test_already_c2_identity(self):
        g = P.sqrt_quadratic(2.0, 1.0)
        res = S.mollify_breakpoints(g, 0.01)
        assert res.profile is g and not res.windows

    def test_abs_value(self):
        res = S.mollify_breakpoints(abs_profile(), 0.1)
        sm = res.profile
        assert sm.continuity_class == "C2"
        assert sm.value_at(-0.3) == 0.3 and sm.value_at(0.4) == 0.4
        ts = np.linspace(-0.1, 0.1, 81)
        assert min(sm.d2_at(float(t)) for t in ts) >= 0.0
        # exact value/slope at both window edges
        assert sm.value_at(-0.1) == pytest.approx(0.1, abs=1e-15)
        assert sm.d1_at(0.1, "left") == pytest.approx(1.0, abs=1e-13)
        assert sm.value_at(0.1, "left") == pytest.approx(0.1, abs=1e-13)

    def test_c2_at_window_edges(self):
        p = curvature_jump_profile()
        sm = S.mollify_breakpoints(p, 1e-3).profile
        for edge in (1.0 - 1e-3, 1.0 + 1e-3):
            l2 = sm.d2_at(edge, "left")
            r2 = sm.d2_at(edge, "right")
            assert abs(l2 - r2) <= 1e-10 * max(1.0, abs(l2), abs(r2))

    def test_derivatives_identical_outside_windows(self):
        p = curvature_jump_profile()
        sm = S.mollify_breakpoints(p, 1e-3).profile
        for t in (0.2, 0.7, 1.3, 1.9):
            assert sm.d1_at(t) == p.d1_at(t)
            assert sm.d2_at(t) == p.d2_at(t)

    def test_value_shim_is_reported_and_bounded(self):
        p = curvature_jump_profile()
        r = 1e-3
        res = S.mollify_breakpoints(p, r)
        w = res.windows[0]
        shift = res.profile.value_at(1.9) - p.value_at(1.9)
        assert shift == pytest.approx(w.shim, abs=1e-15)
        assert abs(w.shim) <= (2 * r) ** 2 * abs(w.d2_jump)

    def test_blend_envelope(self):
        # pure monotone blend between constant curvatures: no overshoot
        p = curvature_jump_profile(1.0, 4.0)
        assert p.d2_at(1.0, "left") == 1.0 and p.d2_at(1.0, "right") == 4.0
        sm = S.mollify_breakpoints(p, 5e-3).profile
        ts = np.linspace(1.0 - 5e-3, 1.0 + 5e-3, 101)
        d2 = [sm.d2_at(float(t)) for t in ts]
        assert min(d2) >= 1.0 - 1e-9 and max(d2) <= 4.0 + 1e-9

    def test_radius_too_large(self):
        p = curvature_jump_profile()
        with pytest.raises(errors.RadiusTooLarge):
            S.mollify_breakpoints(p, 0.6)
        with pytest.raises(errors.RadiusTooLarge):
            S.mollify_breakpoints(p, -1.0)

    def test_sub_resolution_joint_skipped(self):
        # a joint whose window collapses in float is skipped, not smoothed
        b = 1e8  # ulp(1e8) is about 1.5e-8, far above the radius below
        s1 = P.PolySegment(0.0, b, (1.0, 0.1, 0.25))
        v, m = s1.value(b), s1.d1(b)
        s2 = P.PolySegment(b, 2e8, (v, m, 1.0), center=b)
        p = P.RadialProfile([s1, s2])
        res = S.mollify_breakpoints(p, 1e-12)
        assert res.skipped == [b] and not res.windows


class TestReverify:
    def test_sweep_and_baseline(self):
        g = P.sqrt_quadratic(0.5, 1.0)
        rep = S.reverify(g, Condition.INEQ8, (0.1, 6.0), 300)
        assert rep.passed and rep.min_margin > 0.0
        rep2 = S.reverify(g, Condition.INEQ8, (0.1, 6.0), 300,
                          baseline_margin=rep.min_margin)
        assert rep2.margin_loss == pytest.approx(0.0, abs=1e-14)
        assert not rep2.flagged

    def test_direction_for_ineq9(self):
        g = P.sqrt_quadratic(2.0, 1.0)
        rep = S.reverify(g, Condition.INEQ9, (0.1, 6.0), 300)
        assert rep.direction == "plus" and rep.passed

    def test_half_domain_radius_rejected(self):
        p = curvature_jump_profile()
        with pytest.raises(errors.RadiusTooLarge):
            S.mollify_breakpoints(p, 0.5 * (p.domain_hi - p.domain_lo))

    def test_destroyed_margin_is_flagged(self):
        # a convex slope kink satisfies the D_- pair at both one-sided
        # limits, but any C^2 replacement must spike the curvature like
        # jump/width; reverify has to flag the destroyed margin
        kink = P.RadialProfile([
            P.PolySegment(0.5, 1.0, (0.9, -0.4), center=1.0),
            P.PolySegment(1.0, 1.5, (0.9, 0.4), center=1.0),
        ])
        base = S.reverify(kink, Condition.INEQ8, (0.55, 1.45), 300)
        assert base.passed
        res = S.mollify_breakpoints(kink, 0.2)
        rep = S.reverify(res.profile, Condition.INEQ8, (0.55, 1.45), 300,
                         baseline_margin=base.min_margin)
        assert rep.flagged and not rep.passed and rep.min_margin < 0.0

    def test_cap_needs_lam1(self, quadratic_example):
        q = quadratic_example
        rep = S.reverify(q.h, Condition.CAP, (0.0, 2.0 * q.R), 200,
                         lam1=q.lam1)
        assert rep.passed


class TestMarginLossMonotonicity:
    def test_halving_radius_halves_loss(self):
        # curvature jump 0.1 -> 0.35 on the D_- side; the binding margin
        # sits downstream of the window, so the loss is the value shim
        s1 = P.PolySegment(0.2, 1.0, (1.0, 0.05, 0.05))
        v, m = s1.value(1.0), s1.d1(1.0)
        s2 = P.PolySegment(1.0, 2.0, (v, m, 0.175), center=1.0)
        p = P.RadialProfile([s1, s2])
        base = S.reverify(p, Condition.INEQ8, (0.3, 1.9), 600)
        assert base.passed
        gap = 0.8  # min joint gap
        losses = []
        for frac in (1e-2, 5e-3, 2.5e-3):
            sm = S.mollify_breakpoints(p, frac * gap).profile
            rep = S.reverify(sm, Condition.INEQ8, (0.3, 1.9), 600,
                             baseline_margin=base.min_margin)
            losses.append(max(rep.margin_loss, 0.0))
        assert losses[0] > 0.0
        assert losses[1] <= 0.5 * losses[0] * (1.0 + 1e-6) + 1e-15
        assert losses[2] <= 0.5 * losses[1] * (1.0 + 1e-6) + 1e-15


class TestMollifyWithReverify:
    def test_auto_halving_interface(self, quadratic_example):
        q = quadratic_example
        prof, rep, used = S.mollify_with_reverify(
            q.h_raw, Condition.CAP, (0.0, 2.0 * q.R), 300, lam1=q.lam1)
        assert rep.passed and not rep.flagged
        assert used > 0.0
        assert prof.continuity_class == "C2"
