import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crimed.corrupted_kl import (
    KlGeometry,
    check_eps,
    delta_min,
    huber_pair_densities,
    kl_eps_gauss,
    kl_eps_gauss_derivative,
    kl_mean_value_gap_bound,
    sample_huber_corruption,
    solve_c,
)
from crimed.errors import DomainError
from oracles import (
    bisect_c,
    brent_c,
    delta_min_oracle,
    h1_cdf,
    h1_density,
    kolmogorov_distance,
    normalisation_residual,
    quadrature_kl,
    quadrature_masses,
)

EPS_GRID = (0.01, 0.05, 0.1, 0.2, 0.3, 0.45)


class TestEps:
    @pytest.mark.parametrize("eps", [-0.1, 0.5, 0.7, 1 - 1e-12])
    def test_rejects_out_of_range(self, eps):
        with pytest.raises(DomainError):
            check_eps(eps)

    def test_accepts_zero(self):
        assert check_eps(0) == 0.0


class TestDeltaMin:
    def test_zero_at_no_corruption(self):
        assert delta_min(0.0) == 0.0

    @pytest.mark.parametrize("eps, expected", [(0.2, 0.63727872792875), (0.01, 0.025320153880628013)])
    def test_against_quantile_oracle(self, eps, expected):
        # expected values frozen from bisection on scipy's normal CDF
        assert delta_min(eps) == pytest.approx(expected, abs=1e-12)
        assert delta_min(eps) == pytest.approx(delta_min_oracle(eps), abs=1e-12)

    def test_monotone_and_divergent(self):
        grid = np.linspace(0.0, 0.499, 200)
        vals = [delta_min(e) for e in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert delta_min(0.4999999) > 9.0


class TestSolveC:
    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_threshold_gives_one(self, eps):
        sol = solve_c(delta_min(eps), eps)
        assert sol.c == pytest.approx(1.0, abs=1e-6)
        assert sol.delta_plus == pytest.approx(delta_min(eps))
        assert sol.delta_minus == pytest.approx(delta_min(eps))

    def test_large_gap_limit(self):
        assert solve_c(50.0, 0.1).c == pytest.approx(0.1 / 0.9, abs=1e-3)

    def test_matches_bisection_oracle(self):
        assert solve_c(1.0, 0.1).c == pytest.approx(bisect_c(1.0, 0.1), abs=1e-10)
        assert solve_c(1.0, 0.1).c == pytest.approx(brent_c(1.0, 0.1), abs=1e-10)

    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_residual_and_monotone(self, eps):
        dmin = delta_min(eps)
        gaps = dmin + np.linspace(1e-6, 10.0, 60)
        cs = []
        for d in gaps:
            sol = solve_c(d, eps)
            assert abs(normalisation_residual(sol.c, d, eps)) < 1e-10
            assert eps / (1 - eps) < sol.c <= 1.0
            shift = 2.0 / d * math.log(1.0 / sol.c)
            assert sol.delta_plus == pytest.approx(d + shift, abs=1e-12)
            assert sol.delta_minus == pytest.approx(d - shift, abs=1e-12)
            cs.append(sol.c)
        assert all(b < a for a, b in zip(cs, cs[1:]))

    def test_below_threshold_is_domain_error(self):
        with pytest.raises(DomainError, match="minimum distinction gap"):
            solve_c(0.5 * delta_min(0.2), 0.2)

    def test_zero_eps_is_domain_error(self):
        with pytest.raises(DomainError):
            solve_c(1.0, 0.0)

    def test_custom_tolerance_bypasses_cache(self):
        assert solve_c(1.3, 0.2, tol=1e-8).c == pytest.approx(solve_c(1.3, 0.2).c, abs=1e-8)


class TestKl:
    def test_flat_region(self):
        eps = 0.1
        assert kl_eps_gauss(0.0, 0.99 * delta_min(eps), eps) == 0.0
        assert kl_eps_gauss(1.0, 0.0, eps) == 0.0

    def test_zero_eps_is_gaussian_kl(self):
        for d in (0.0, 0.3, 2.0, 7.5):
            assert kl_eps_gauss(0.0, d, 0.0) == 0.5 * d * d

    def test_small_eps_continuity(self):
        assert kl_eps_gauss(0.0, 2.0, 1e-8) == pytest.approx(2.0, abs=1e-3)

    def test_quadrature_x0_y2(self):
        c = solve_c(2.0, 0.1).c
        assert kl_eps_gauss(0.0, 2.0, 0.1) == pytest.approx(quadrature_kl(0.0, 2.0, 0.1, c), abs=1e-6)

    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_quadrature_grid(self, eps):
        dmin = delta_min(eps)
        for d in dmin + np.linspace(0.01, 5.0, 8):
            c = solve_c(d, eps).c
            assert kl_eps_gauss(0.0, d, eps) == pytest.approx(quadrature_kl(0.0, d, eps, c), abs=1e-6)

    @pytest.mark.parametrize("x, d", [(-3.0, 0.5), (0.0, 1.0), (2.5, 0.25), (10.0, 3.0)])
    @pytest.mark.parametrize("y", [1.0, 4.0, 12.5])
    def test_shift_invariance(self, x, d, y):
        if y < x + d:
            return
        assert kl_eps_gauss(x + d, y, 0.1) == pytest.approx(kl_eps_gauss(x, y - d, 0.1), abs=1e-12)

    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_nondecreasing_and_continuous_at_threshold(self, eps):
        dmin = delta_min(eps)
        grid = np.linspace(0.0, dmin + 6.0, 400)
        vals = [kl_eps_gauss(0.0, d, eps) for d in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert abs(kl_eps_gauss(0.0, dmin + 5e-5, eps) - kl_eps_gauss(0.0, dmin - 5e-5, eps)) < 1e-6

    def test_non_convexity_witness(self):
        # found by a grid search with step 0.1 over [0, 8] at eps = 0.1
        k1, k2, k3 = (kl_eps_gauss(0.0, d, 0.1) for d in (2.0, 2.1, 2.2))
        assert k2 > 0.5 * (k1 + k3)

    def test_saturates_below_log_inverse_c(self):
        eps = 0.1
        assert kl_eps_gauss(0.0, 40.0, eps) <= math.log((1 - eps) / eps)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.001, 0.49), st.floats(0.0, 10.0), st.floats(-5.0, 5.0))
    def test_nonnegative(self, eps, d, x):
        assert kl_eps_gauss(x, x + d, eps) >= 0.0

    def test_geometry_wrapper(self):
        geo = KlGeometry(0.2)
        assert geo.delta_min == delta_min(0.2)
        assert geo.kl(0.0, 2.0) == kl_eps_gauss(0.0, 2.0, 0.2)
        assert geo.derivative(2.0) == kl_eps_gauss_derivative(0.0, 2.0, 0.2)


class TestDerivative:
    def test_zero_in_flat_region(self):
        assert kl_eps_gauss_derivative(0.0, 0.5 * delta_min(0.2), 0.2) == 0.0

    def test_finite_difference_at_two(self):
        h = 1e-5
        fd = (kl_eps_gauss(0.0, 2.0 + h, 0.1) - kl_eps_gauss(0.0, 2.0 - h, 0.1)) / (2 * h)
        assert kl_eps_gauss_derivative(0.0, 2.0, 0.1) == pytest.approx(fd, rel=1e-4)

    def test_vanishes_at_threshold(self):
        eps = 0.1
        assert kl_eps_gauss_derivative(0.0, delta_min(eps) + 1e-6, eps) < 1e-3

    @pytest.mark.parametrize("eps", EPS_GRID)
    def test_finite_difference_grid(self, eps):
        dmin = delta_min(eps)
        h = 1e-5
        for d in dmin + np.linspace(2e-3, 5.0, 25):
            fd = (kl_eps_gauss(0.0, d + h, eps) - kl_eps_gauss(0.0, d - h, eps)) / (2 * h)
            assert kl_eps_gauss_derivative(0.0, d, eps) == pytest.approx(fd, rel=1e-4)

    def test_positive_above_threshold(self):
        assert kl_eps_gauss_derivative(3.0, 1.0, 0.1) > 0.0

    def test_negative_delta_rejected(self):
        with pytest.raises(DomainError):
            kl_eps_gauss_derivative(0.0, -1.0, 0.1)


class TestHuberPair:
    def test_densities_integrate_to_one(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        m1, m2 = quadrature_masses(0.0, 2.0, 0.2, pair.solution.c)
        assert m1 == pytest.approx(1.0, abs=1e-6)
        assert m2 == pytest.approx(1.0, abs=1e-6)

    def test_package_densities_agree_with_oracle(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        c = pair.solution.c
        for t in np.linspace(-4, 6, 41):
            p1 = 0.8 * (math.exp(-0.5 * t * t) if t < pair.h1_start else c * math.exp(-0.5 * (t - 2) ** 2))
            assert pair.left_density(t) == pytest.approx(p1 / math.sqrt(2 * math.pi), rel=1e-12)
            assert pair.h1_density(t) == pytest.approx(h1_density(t, 0.0, 2.0, 0.2, c), abs=1e-14)

    def test_support_boundaries(self):
        x, y, eps = -1.0, 1.5, 0.2
        pair = huber_pair_densities(x, y, eps)
        log_inv_c = math.log(1.0 / pair.solution.c)
        assert pair.h1_start == pytest.approx((x + y) / 2 + log_inv_c / (y - x), abs=1e-14)
        assert pair.h2_end == pytest.approx((x + y) / 2 - log_inv_c / (y - x), abs=1e-14)
        assert pair.h1_start == pytest.approx(x + pair.solution.delta_plus / 2, abs=1e-12)
        assert pair.h2_end == pytest.approx(x + pair.solution.delta_minus / 2, abs=1e-12)

    def test_quadrature_kl_is_closed_form(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        assert quadrature_kl(0.0, 2.0, 0.2, pair.solution.c) == pytest.approx(
            kl_eps_gauss(0.0, 2.0, 0.2), abs=1e-6)

    def test_h1_density_integrates_to_one(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        assert h1_cdf(60.0, 0.0, 2.0, 0.2, pair.solution.c) == pytest.approx(1.0, abs=1e-6)

    def test_gap_too_small(self):
        with pytest.raises(DomainError):
            huber_pair_densities(0.0, 0.5 * delta_min(0.1), 0.1)


class TestSampler:
    @pytest.fixture(scope="class")
    @staticmethod
    def draws():
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        rng = np.random.default_rng(11)
        return pair, sample_huber_corruption(pair, "left", rng, size=100_000)

    def test_support(self, draws):
        pair, xs = draws
        assert np.all(xs >= pair.h1_start)

    def test_kolmogorov_distance(self, draws):
        pair, xs = draws
        c = pair.solution.c
        dist = kolmogorov_distance(xs, lambda t: h1_cdf(t, 0.0, 2.0, 0.2, c))
        assert dist < 0.02

    def test_right_side_is_reflection(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        left = sample_huber_corruption(pair, "left", np.random.default_rng(5), size=50)
        right = sample_huber_corruption(pair, "right", np.random.default_rng(5), size=50)
        np.testing.assert_allclose(right, 2.0 - left)
        assert np.all(right <= pair.h2_end + 1e-12)

    def test_scalar_draw(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        t = pair.sample("left", np.random.default_rng(0))
        assert isinstance(t, float) and t >= pair.h1_start

    def test_bad_side(self):
        pair = huber_pair_densities(0.0, 2.0, 0.2)
        with pytest.raises(ValueError):
            sample_huber_corruption(pair, "up", np.random.default_rng(0))


class TestMeanValueBound:
    def test_equal_means(self):
        assert kl_mean_value_gap_bound(0.0, 0.0, 3.0, 0.1) == 0.0

    def test_example(self):
        bound = kl_mean_value_gap_bound(0.0, 0.5, 3.0, 0.1)
        actual = kl_eps_gauss(0.0, 3.0, 0.1) - kl_eps_gauss(0.5, 3.0, 0.1)
        assert 0.0 <= actual <= bound

    def test_reversed_order(self):
        assert kl_mean_value_gap_bound(0.5, 0.0, 3.0, 0.1) == 0.0
        assert kl_eps_gauss(0.5, 3.0, 0.1) - kl_eps_gauss(0.0, 3.0, 0.1) <= 0.0

    def test_random_grid(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 100:
            eps = rng.uniform(0.01, 0.45)
            dmin = delta_min(eps)
            m_star = rng.uniform(-2, 2)
            m_a = m_star - dmin - rng.uniform(1e-3, 6)
            m_b = m_star - dmin - rng.uniform(1e-3, 6)
            bound = kl_mean_value_gap_bound(m_a, m_b, m_star, eps)
            diff = kl_eps_gauss(m_a, m_star, eps) - kl_eps_gauss(m_b, m_star, eps)
            assert diff <= bound + 1e-12
            checked += 1

    def test_precondition(self):
        with pytest.raises(DomainError):
            kl_mean_value_gap_bound(0.0, 2.9, 3.0, 0.1)
