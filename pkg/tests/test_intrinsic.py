import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pnmcsurf.errors import InadmissibleInitialData
from pnmcsurf.intrinsic import (
    InitialTriple,
    check_admissible,
    conserved_c2,
    derive_profile_constants,
    f_from_K,
    gauss_curvature,
    integrate_intrinsic,
    kappa_rhs,
    mean_curvature_squared,
    to_f_chart,
)


def bisect_root(f, lo, hi, tol=1e-13):
    """Plain bisection oracle, independent of the package's root finder."""
    flo = f(lo)
    assert flo * f(hi) < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
            flo = f(lo)
    return 0.5 * (lo + hi)


class TestAdmissibility:
    def test_anchor_bounds_are_exact(self, anchor_triple):
        v = check_admissible(anchor_triple)
        assert v.admissible
        assert v.ddkappa_lower == -8.0
        assert v.ddkappa_upper == -16.0 / 3.0
        assert v.margin_kappa == 1.0
        assert v.margin_gauss == 2.0
        assert v.margin_mean_curvature == 2.0
        assert v.margin_conserved == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_negative_kappa_fails(self):
        v = check_admissible(InitialTriple(-1.0, 0.0, 0.0))
        assert not v.admissible
        assert v.margin_kappa < 0.0

    def test_lower_bound_is_strict(self):
        # ddkappa0 exactly on the bound must fail (open conditions).
        v = check_admissible(InitialTriple(1.0, 0.0, -8.0))
        assert not v.admissible
        assert v.margin_mean_curvature == 0.0

    def test_above_upper_bound_fails(self):
        v = check_admissible(InitialTriple(1.0, 0.0, -5.0))
        assert not v.admissible
        assert v.margin_conserved < 0.0

    @given(
        k=st.floats(-2.0, 3.0),
        dk=st.floats(-3.0, 3.0),
        ddk=st.floats(-20.0, 5.0),
    )
    def test_verdict_matches_margins(self, k, dk, ddk):
        v = check_admissible(InitialTriple(k, dk, ddk))
        assert v.admissible == all(m > 0.0 for m in v.margins)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            InitialTriple(math.nan, 0.0, 0.0)


class TestKappaRhs:
    def test_anchor_value(self):
        assert kappa_rhs(1.0, 0.0, -6.0) == pytest.approx(92.0 / 3.0, abs=1e-12)

    def test_zero_second_derivatives(self):
        assert kappa_rhs(1.0, 0.0, 0.0) == pytest.approx(-64.0 / 3.0, abs=1e-12)

    def test_zero_kappa_raises(self):
        with pytest.raises(ZeroDivisionError):
            kappa_rhs(0.0, 1.0, 1.0)

    @given(
        k=st.floats(0.05, 5.0),
        dk=st.floats(-5.0, 5.0),
        ddk=st.floats(-20.0, 20.0),
    )
    def test_even_under_sign_flip(self, k, dk, ddk):
        # Every monomial of the defining ODE is odd under
        # (kappa, kappa', kappa'') -> (-kappa, kappa', -kappa''), including
        # the kappa * kappa''' term, so the solved kappa''' is even.
        plus = kappa_rhs(k, dk, ddk)
        minus = kappa_rhs(-k, dk, -ddk)
        assert minus == pytest.approx(plus, rel=1e-12, abs=1e-12)

    @given(
        k=st.floats(0.05, 5.0),
        dk=st.floats(-5.0, 5.0),
        ddk=st.floats(-20.0, 20.0),
    )
    def test_solves_the_cubic_identity(self, k, dk, ddk):
        ddd = kappa_rhs(k, dk, ddk)
        resid = (
            3.0 * k * ddd
            + 26.0 * k * k * ddk
            - 3.0 * dk * ddk
            + 72.0 * k**3 * dk
            + 32.0 * k**3
            + 32.0 * k**5
        )
        scale = max(1.0, abs(k * ddd), abs(k * k * ddk), k**5)
        assert abs(resid) <= 1e-10 * scale


class TestIntegration:
    def test_anchor_closed_forms_at_start(self, anchor_solution):
        s0 = anchor_solution.samples[0]
        assert s0.u == 0.0
        assert s0.K == pytest.approx(-1.0, abs=1e-14)
        assert s0.f_K == pytest.approx(math.sqrt(0.5), abs=1e-14)
        assert s0.c2 == pytest.approx(math.sqrt(2.0), abs=1e-14)
        assert s0.theta == 1.0

    def test_gauss_identity_at_every_sample(self, anchor_solution):
        for s in anchor_solution.samples:
            assert abs(s.K - (1.0 - 3.0 * s.f_K**2 - s.c2 * s.f_K**3)) <= 1e-12

    def test_validity_window_detected(self, anchor_solution):
        assert anchor_solution.u_max >= 0.2
        assert anchor_solution.boundary_event is not None

    def test_conserved_constant_drift(self, anchor_solution):
        assert anchor_solution.c2_drift <= 1e-8

    def test_validity_at_samples(self, anchor_solution):
        for s in anchor_solution.samples:
            assert s.kappa > 0.0
            assert s.K < 1.0
            assert s.f_K > 0.0
            assert s.c2 > 0.0
            assert s.theta > 0.0
            # K' > 0 via -2 kappa kappa' - kappa'' > 0
            assert -2.0 * s.kappa * s.dkappa - s.ddkappa > 0.0

    def test_theta_starts_at_one_for_other_triples(self):
        sol = integrate_intrinsic(
            InitialTriple(1.0, 0.0, -7.0), u_max_request=0.05, n_samples=8
        )
        assert sol.samples[0].theta == 1.0

    def test_theta_matches_quadrature(self, anchor_solution):
        # theta = exp(integral of kappa); check against Simpson quadrature
        # on a dense kappa grid, an oracle independent of the ODE state.
        from scipy.integrate import simpson

        target = anchor_solution.samples[-1]
        us = np.linspace(0.0, target.u, 4001)
        kappas = np.array([anchor_solution.trajectory(u)[0] for u in us])
        theta_quad = math.exp(simpson(kappas, x=us))
        assert target.theta == pytest.approx(theta_quad, rel=1e-9)

    def test_inadmissible_rejected(self):
        with pytest.raises(InadmissibleInitialData):
            integrate_intrinsic(InitialTriple(1.0, 0.0, -5.0), u_max_request=1.0)

    def test_translation_invariance(self, anchor_solution):
        # Restarting from the state at u = a reproduces kappa(a + u).
        a = 0.1
        state = anchor_solution.trajectory(a)
        shifted = integrate_intrinsic(
            InitialTriple(*state[:3]), u_max_request=0.5, n_samples=64
        )
        errs = [
            abs(shifted.trajectory(u)[0] - anchor_solution.trajectory(a + u)[0])
            for u in np.linspace(0.0, 0.5, 64)
        ]
        assert max(errs) <= 1e-8

    def test_request_shorter_than_window(self, anchor_triple):
        sol = integrate_intrinsic(anchor_triple, u_max_request=0.1, n_samples=16)
        assert sol.boundary_event is None
        assert sol.u_max == 0.1


class TestFfromK:
    def test_anchor_root_matches_bisection_oracle(self):
        c2 = math.sqrt(2.0)
        oracle = bisect_root(lambda x: 1.0 - 3.0 * x * x - c2 * x**3 - (-1.0), 0.0, 2.0)
        assert f_from_K(-1.0, c2) == pytest.approx(oracle, abs=1e-10)
        assert f_from_K(-1.0, c2) == pytest.approx(2.0**-0.5, abs=1e-12)

    @given(c2=st.floats(0.01, 50.0))
    def test_unit_root_when_K_hits_minus_two_minus_c2(self, c2):
        # h(1) = 1 - 3 - c^2, so that K has root exactly 1.
        assert f_from_K(1.0 - 3.0 - c2, c2) == pytest.approx(1.0, rel=1e-12)

    @given(
        c2=st.floats(0.01, 50.0),
        K1=st.floats(-50.0, 0.99),
        K2=st.floats(-50.0, 0.99),
    )
    def test_monotone_decreasing_in_K(self, c2, K1, K2):
        if abs(K1 - K2) <= 1e-9:
            return
        lo, hi = min(K1, K2), max(K1, K2)
        assert f_from_K(lo, c2) > f_from_K(hi, c2)

    def test_no_root_above_one(self):
        with pytest.raises(ValueError):
            f_from_K(1.0, 1.0)


class TestFChart:
    def test_reflection_flips_u_and_odd_derivatives(self, anchor_solution):
        refl = to_f_chart(anchor_solution)
        orig = anchor_solution.samples
        assert len(refl) == len(orig)
        for r, s in zip(refl, reversed(orig)):
            assert r.u == -s.u
            assert r.kappa == s.kappa
            assert r.dkappa == -s.dkappa
            assert r.ddkappa == s.ddkappa
            assert r.K == s.K
            assert r.f_K == s.f_K
            assert r.c2 == s.c2
            assert r.theta == pytest.approx(1.0 / s.theta, rel=1e-15)

    def test_f_is_strictly_increasing(self, anchor_solution):
        refl = to_f_chart(anchor_solution)
        fs = [r.f_K for r in refl]
        assert all(b > a for a, b in zip(fs, fs[1:]))

    def test_involution(self, anchor_solution):
        twice = to_f_chart(to_f_chart(anchor_solution))
        for a, b in zip(twice, anchor_solution.samples):
            assert (a.u, a.kappa, a.dkappa, a.ddkappa, a.K, a.f_K, a.c2) == (
                b.u, b.kappa, b.dkappa, b.ddkappa, b.K, b.f_K, b.c2,
            )
            # theta is inverted twice, which costs one rounding step
            assert a.theta == pytest.approx(b.theta, rel=4e-16)

    def test_reflected_sequence_satisfies_the_f_chart_ode(self, anchor_solution):
        # In the chart with increasing f the curvature obeys the mirror ODE
        #   3 k k''' - 26 k^2 k'' - 3 k' k'' + 72 k^3 k' - 32 k^3 - 32 k^5 = 0.
        # kappa''' comes from a fourth-order stencil on the sampled kappa''
        # sequence, independent of the right-hand side used to integrate;
        # the stencil needs dense samples because the fifth derivative of
        # kappa is large in places.
        dense = integrate_intrinsic(
            anchor_solution.triple, u_max_request=5.0, n_samples=1024
        )
        refl = to_f_chart(dense)
        us = np.array([r.u for r in refl])
        h = us[1] - us[0]
        assert np.allclose(np.diff(us), h, rtol=1e-12)
        worst = 0.0
        for idx in range(2, len(refl) - 2):
            r = refl[idx]
            ddd = (
                refl[idx - 2].ddkappa
                - 8.0 * refl[idx - 1].ddkappa
                + 8.0 * refl[idx + 1].ddkappa
                - refl[idx + 2].ddkappa
            ) / (12.0 * h)
            resid = (
                3.0 * r.kappa * ddd
                - 26.0 * r.kappa**2 * r.ddkappa
                - 3.0 * r.dkappa * r.ddkappa
                + 72.0 * r.kappa**3 * r.dkappa
                - 32.0 * r.kappa**3
                - 32.0 * r.kappa**5
            )
            worst = max(worst, abs(resid))
        assert worst <= 1e-6


class TestDerivedConstants:
    def test_anchor_constants(self, anchor_solution):
        refl = to_f_chart(anchor_solution)
        c, C = derive_profile_constants(refl[-1])
        assert c * c == pytest.approx(math.sqrt(2.0), rel=1e-12)
        assert C * C == pytest.approx((28.0 / 9.0) * 2.0**1.75, rel=1e-12)

    def test_constants_stable_across_samples(self, anchor_solution):
        refl = to_f_chart(anchor_solution)
        values = [derive_profile_constants(r)[1] for r in refl[:: len(refl) // 8]]
        spread = (max(values) - min(values)) / values[0]
        assert spread <= 1e-7


def test_scalar_helpers_consistent():
    k, dk, ddk = 1.3, -0.2, -9.0
    assert gauss_curvature(k, dk) == -k * k - dk
    fk2 = mean_curvature_squared(k, dk, ddk)
    c2 = conserved_c2(k, dk, ddk)
    K = gauss_curvature(k, dk)
    # c^2 is defined exactly so that K = 1 - 3 f^2 - c^2 f^3.
    assert K == pytest.approx(1.0 - 3.0 * fk2 - c2 * fk2**1.5, abs=1e-12)
