import math
import warnings

import numpy as np
import pytest
from scipy import optimize
from scipy.special import erf

from maxsum import distengine as de
from maxsum import gengamma as gg
from maxsum.errors import DomainError, MassDefectError
from maxsum.gengamma import GenGammaParams

# KS(S_3, 6^(1/3) M_3) for the half-normal, engine at m = 2^16 and 2^17:
# 0.0060393658511 and 0.0060393657146.
D3_STAR = 0.0060393658511

rng = np.random.default_rng(3)


class TestDiscretize:
    def test_auto_x_max_half_normal(self, hn_grid):
        # erfc(x / sqrt 2) < 1e-10 from x = 6.467 on
        assert hn_grid.x_max >= 6.5
        assert hn_grid.mass_defect < 1e-10

    def test_exponential_mass(self, exponential):
        d = de.discretize(exponential, x_max=23.5, m=2 ** 14)
        assert d.mass_defect < 1e-10

    def test_insufficient_truncation(self, exponential):
        with pytest.raises(MassDefectError):
            de.discretize(exponential, x_max=10.0, m=2 ** 10)

    @pytest.mark.parametrize("m", [1000, 0, 3, 2.0])
    def test_power_of_two(self, half_normal, m):
        with pytest.raises(DomainError):
            de.discretize(half_normal, m=m)

    def test_cdf_exact_at_edges(self, hn_grid):
        assert np.max(np.abs(hn_grid.cdf - erf(hn_grid.edges / math.sqrt(2)))) <= 1e-14

    def test_immutable(self, hn_grid):
        with pytest.raises(ValueError):
            hn_grid.pdf[0] = 1.0

    def test_singular_density(self):
        d = de.discretize(GenGammaParams(1.0, 0.25, 3.0), m=2 ** 12)
        assert abs(math.fsum(d.masses) - (1 - d.mass_defect)) < 1e-12

    def test_csv_export(self, tmp_path, half_normal):
        d = de.discretize(half_normal, m=2 ** 6)
        path = tmp_path / "d.csv"
        d.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,pdf,cdf" and len(lines) == 65
        x, p, c = map(float, lines[10].split(","))
        assert (x, p, c) == (d.edges[9], d.pdf[9], d.cdf[9])


class TestSum:
    def test_identity_for_one(self, hn_grid):
        assert de.sum_distribution(hn_grid, 1) is hn_grid

    def test_half_normal_pair(self, hn_grid):
        s2 = de.sum_distribution(hn_grid, 2)
        assert np.max(np.abs(s2.cdf - erf(s2.edges / 2) ** 2)) <= 1e-6

    def test_erlang(self, exponential):
        s3 = de.sum_distribution(de.discretize(exponential), 3)
        x = s3.edges
        erlang = -np.expm1(-x) - np.exp(-x) * (x + x * x / 2)
        assert np.max(np.abs(s3.cdf - erlang)) <= 1e-7

    def test_associativity(self, half_normal):
        base = de.discretize(half_normal, m=2 ** 14)
        four = de.sum_distribution(base, 4)
        two_two = de.sum_distribution(de.sum_distribution(base, 2), 2)
        xs = four.edges
        assert np.max(np.abs(four.cdf_at(xs) - two_two.cdf_at(xs))) <= 1e-8

    def test_mass_conservation(self, hn_grid, hn_sum3, hn_max3):
        for d in (hn_grid, hn_sum3, hn_max3, de.scale(hn_max3, 1.7)):
            assert abs(math.fsum(d.pdf) * d.step - (1 - d.mass_defect)) < 1e-10
            assert np.all(np.diff(d.cdf) >= 0)

    def test_irwin_hall(self):
        assert np.allclose(de.irwin_hall_cell_masses(2), [0.5, 0.5], atol=0, rtol=1e-15)
        assert np.allclose(de.irwin_hall_cell_masses(3), [1 / 6, 2 / 3, 1 / 6], atol=0, rtol=1e-15)
        for n in (4, 7, 12):
            assert math.fsum(de.irwin_hall_cell_masses(n)) == pytest.approx(1.0, abs=1e-15)


class TestMaxAndScale:
    def test_identity(self, hn_grid):
        assert de.max_distribution(hn_grid, 1) is hn_grid
        assert de.scale(hn_grid, 1.0) is hn_grid

    def test_max3_density(self, half_normal, hn_max3):
        x = hn_max3.midpoints[::997]
        f = np.asarray(gg.density(half_normal, x))
        F = np.asarray(gg.cdf(half_normal, x))
        assert np.max(np.abs(hn_max3.pdf[::997] - 3 * f * F ** 2)) <= 1e-7

    def test_scaled_max_pair_matches_sum(self, hn_grid):
        scaled = de.scale(de.max_distribution(hn_grid, 2), math.sqrt(2))
        assert np.max(np.abs(scaled.cdf - erf(scaled.edges / 2) ** 2)) <= 1e-8

    def test_scale_doubles_mean(self, hn_grid):
        assert de.moment(de.scale(hn_grid, 2.0), 1) == pytest.approx(2 * de.moment(hn_grid, 1),
                                                                    rel=1e-8)


class TestKs:
    def test_self(self, hn_grid):
        assert de.ks_distance(hn_grid, hn_grid) == 0.0

    def test_true_identity(self, hn_grid):
        s2 = de.sum_distribution(hn_grid, 2)
        m2 = de.scale(de.max_distribution(hn_grid, 2), math.sqrt(2))
        assert de.ks_distance(s2, m2) < 1e-5

    def test_refuted_identity_golden(self, hn_sum3, hn_max3):
        d = de.ks_distance(hn_sum3, de.scale(hn_max3, 6 ** (1 / 3)))
        assert d == pytest.approx(D3_STAR, rel=1e-6)

    def test_metric_axioms(self, half_normal):
        base = de.discretize(half_normal, m=2 ** 12)
        dists = [de.scale(base, c) for c in rng.uniform(0.5, 2.0, 6)]
        dists += [de.sum_distribution(base, 2), de.max_distribution(base, 3)]
        for f in dists:
            assert de.ks_distance(f, f) == 0.0
            for g in dists:
                assert de.ks_distance(f, g) == de.ks_distance(g, f)
                for h in dists:
                    assert de.ks_distance(f, h) <= de.ks_distance(f, g) + de.ks_distance(g, h) + 1e-15

    def test_constant_is_forced_at_sqrt2(self, half_normal):
        base = de.discretize(half_normal, m=2 ** 14)
        s2 = de.sum_distribution(base, 2)
        m2 = de.max_distribution(base, 2)
        res = optimize.minimize_scalar(lambda c: de.ks_distance(s2, de.scale(m2, c)),
                                       bounds=(1.2, 1.6), method="bounded",
                                       options={"xatol": 1e-7})
        assert abs(res.x - math.sqrt(2)) < 1e-3


class TestMoments:
    def test_remark_moments(self, hn_sum3, hn_max3):
        assert de.moment(hn_sum3, 2) == pytest.approx(3 + 12 / math.pi, rel=1e-5)
        assert de.moment(hn_max3, 2) == pytest.approx(1 + 2 * math.sqrt(3) / math.pi, rel=1e-5)

    def test_exponential_mean(self, exponential):
        assert de.moment(de.discretize(exponential), 1) == pytest.approx(1.0, rel=1e-5)

    def test_ratio_differs_from_constant(self, hn_sum3, hn_max3):
        ratio = de.moment(hn_sum3, 2) / de.moment(hn_max3, 2)
        assert ratio == pytest.approx(3.2434, abs=5e-5)
        assert 6 ** (2 / 3) == pytest.approx(3.3019, abs=5e-5)
        assert 6 ** (2 / 3) - ratio > 0.05

    def test_tail_warning(self, exponential):
        d = de.discretize(exponential, x_max=20.0, m=2 ** 10, tol=1e-8)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            de.moment(d, 8)
        assert any(issubclass(w.category, RuntimeWarning) for w in caught)


class TestSmallX:
    def test_half_normal_limits(self, half_normal):
        s = de.small_x_probe(half_normal, 2, "sum")
        m = de.small_x_probe(half_normal, 2, "max")
        assert s.limit_claim == pytest.approx(1 / math.pi, rel=1e-14)
        assert m.limit_claim == pytest.approx(2 / math.pi, rel=1e-14)
        assert s.converged and m.converged

    def test_n_one_limits_coincide(self):
        params = GenGammaParams(1.3, 0.7, 2.2)
        assert de.small_x_limit(params, 1, "sum") == pytest.approx(
            de.small_x_limit(params, 1, "max"), rel=1e-14)

    @pytest.mark.parametrize("params", [GenGammaParams.half_normal(), GenGammaParams(1, 0.25, 3),
                                        GenGammaParams(0.8, 2.5, 1.2)])
    @pytest.mark.parametrize("n", [2, 3])
    def test_local_grid_matches_series(self, params, n):
        for x in de.SMALL_X_POINTS:
            grid = de.local_sum_cdf(params, n, x)
            series = de.small_x_sum_series(params, n, x)
            assert grid == pytest.approx(series, rel=1e-4)

    def test_underflow(self):
        with pytest.raises(Exception, match="underflow"):
            de.small_x_probe(GenGammaParams(1.0, 40.0, 1.0), 2, "max")

    def test_bad_which(self, half_normal):
        with pytest.raises(DomainError):
            de.small_x_probe(half_normal, 2, "median")


class TestTail:
    def test_half_normal_three(self, half_normal):
        probe = de.tail_ratio_probe(half_normal, 3)
        assert probe.converged
        assert abs(probe.ratios[-1] - 3) < 0.03

    def test_n_one(self, half_normal):
        assert set(de.tail_ratio_probe(half_normal, 1).ratios) == {1.0}

    def test_exponential_closed_form(self, exponential):
        probe = de.tail_ratio_probe(exponential, 2)
        for x, r in zip(probe.x_values, probe.ratios):
            assert r == pytest.approx(2 - math.exp(-x), rel=1e-12)

    @pytest.mark.parametrize("beta, z", [(b, z) for b in (1.5, 2.0, 3.0) for z in (1.0, 2.0, 4.0)])
    def test_integration_by_parts(self, beta, z):
        lhs, rhs = de.tail_integral_identity(beta, z)
        assert lhs == pytest.approx(rhs, rel=1e-6)

    @pytest.mark.parametrize("params", [GenGammaParams.half_normal(), GenGammaParams(1, 1, 0.5),
                                        GenGammaParams(2, 3, 1.5)])
    def test_survival_bounds_bracket_for_large_x(self, params):
        eps = 0.25
        for level in (1e-30, 1e-80, 1e-200):
            x = gg.inverse_survival(params, level)
            lo, hi = de.survival_bounds(params, x, eps)
            assert lo <= gg.log_survival(params, x) <= hi

    def test_chebyshev_bound_is_an_upper_bound(self, half_normal, hn_sum3):
        eps = de.admissible_eps(1.0, 2.0, 3)
        surv = hn_sum3.survival()
        for i in range(5000, 80000, 5000):
            if surv[i] > 1e-8:
                assert math.log(surv[i]) <= de.chebyshev_log_bound(half_normal, 3, hn_sum3.edges[i], eps)


class TestContradiction:
    def test_half_normal_three_diverges(self, half_normal):
        probe = de.contradiction_probe(half_normal, 3)
        assert probe.applicable and probe.converged and probe.log_scale
        assert probe.ratios[-1] > de.DIVERGENCE_LOG
        assert "grid" in probe.sources and "chebyshev" in probe.sources

    def test_half_normal_two_not_applicable(self, half_normal):
        probe = de.contradiction_probe(half_normal, 2)
        assert not probe.applicable
        assert probe.summary()["applicable"] is False

    def test_heavy_tail_decay(self):
        params = GenGammaParams(1.0, 1.0, 0.5)
        probe = de.contradiction_probe(params, 2)
        r = np.array(probe.ratios)
        assert probe.converged and np.all(np.diff(r) < 0) and r[-1] < 1e-6
        # X = G^2 with G ~ Gamma(2): P(X > x) = e^{-sqrt x}(1 + sqrt x), C = sqrt 2
        for x, ratio in zip(probe.x_values, r):
            exact = (math.exp(-math.sqrt(x) + math.sqrt(x / math.sqrt(2)))
                     * (1 + math.sqrt(x)) / (1 + math.sqrt(x / math.sqrt(2))))
            assert ratio == pytest.approx(exact, rel=1e-9)
