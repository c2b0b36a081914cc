import numpy as np
import pytest

from effsens import (
    ArgumentError,
    ConfigurationError,
    DensityEstimate,
    Domain,
    Interval,
    fit_kde,
    gauss_rule,
    infer_domain,
    split_sizes,
)
from effsens.density import silverman_bandwidth

UNIT_DOMAIN = Domain(Interval(0.0, 1.0), Interval(0.0, 1.0))


def uniform_sample(n, seed=0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.random(n), rng.random(n)


class TestInferDomain:
    def test_hull(self):
        dom = infer_domain([0.0, 1.0], [0.0, 1.0], 0.0)
        assert (dom.x.lo, dom.x.hi, dom.y.lo, dom.y.hi) == (0.0, 1.0, 0.0, 1.0)

    def test_padding(self):
        dom = infer_domain([0.0, 1.0], [0.0, 1.0], 0.05)
        assert dom.x.lo == pytest.approx(-0.05)
        assert dom.y.hi == pytest.approx(1.05)

    def test_degenerate_axis_padded_by_magnitude(self):
        dom = infer_domain([0.0, 1.0], [3.0, 3.0], 0.05)
        assert dom.y.lo == pytest.approx(2.85)
        assert dom.y.hi == pytest.approx(3.15)

    def test_degenerate_axis_without_pad_rejected(self):
        with pytest.raises(ArgumentError):
            infer_domain([0.0, 1.0], [3.0, 3.0], 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ArgumentError):
            infer_domain([], [], 0.0)

    def test_negative_pad_rejected(self):
        with pytest.raises(ArgumentError):
            infer_domain([0.0, 1.0], [0.0, 1.0], -0.1)


class TestSilverman:
    def test_rule_value(self):
        rng = np.random.Generator(np.random.Philox(key=1))
        v = rng.random(200)
        h = silverman_bandwidth(v, 1.0)
        assert h == pytest.approx(1.06 * np.std(v, ddof=1) * 200 ** (-0.2))

    def test_truncated_to_quarter_width(self):
        v = np.array([0.0, 100.0] * 50)
        assert silverman_bandwidth(v, 1.0) == 0.25


class TestFitKde:
    def test_uniform_density_near_one(self):
        x, y = uniform_sample(10_000)
        de = fit_kde(x, y, UNIT_DOMAIN)
        # a single point is noisy at the KDE rate; average an interior patch
        g = np.linspace(0.3, 0.7, 9)
        assert float(np.mean(de.pdf_grid(g, g))) == pytest.approx(1.0, abs=0.05)
        assert 0.7 <= de.pdf(0.5, 0.5) <= 1.3

    def test_mass_is_one(self):
        x, y = uniform_sample(500, seed=3)
        de = fit_kde(x, y, UNIT_DOMAIN)
        rx = gauss_rule(64, UNIT_DOMAIN.x)
        ry = gauss_rule(64, UNIT_DOMAIN.y)
        mass = float(rx.weights @ de.pdf_grid(rx.nodes, ry.nodes) @ ry.weights)
        assert mass == pytest.approx(1.0, abs=1e-3)

    def test_floor_at_empty_corner(self):
        rng = np.random.Generator(np.random.Philox(key=2))
        x = 0.5 + 0.01 * rng.standard_normal(100)
        y = 0.5 + 0.01 * rng.standard_normal(100)
        de = fit_kde(x, y, UNIT_DOMAIN, bandwidths=(0.05, 0.05))
        # renormalization after flooring may shave a relative epsilon
        assert de.pdf(0.0, 0.0) >= 0.99 * de.floor
        assert de.pdf(1.0, 1.0) >= 0.99 * de.floor

    def test_too_few_points_rejected(self):
        with pytest.raises(ConfigurationError):
            fit_kde(np.arange(5) / 5, np.arange(5) / 5, UNIT_DOMAIN)

    def test_point_outside_domain_rejected(self):
        x, y = uniform_sample(50)
        x[7] = 2.0
        with pytest.raises(ArgumentError):
            fit_kde(x, y, UNIT_DOMAIN)

    def test_nonpositive_bandwidth_rejected(self):
        x, y = uniform_sample(50)
        with pytest.raises(ConfigurationError):
            fit_kde(x, y, UNIT_DOMAIN, bandwidths=(0.0, 0.1))

    def test_evaluation_outside_domain_rejected(self):
        x, y = uniform_sample(50)
        de = fit_kde(x, y, UNIT_DOMAIN)
        with pytest.raises(ArgumentError):
            de.pdf(1.2, 0.5)
        with pytest.raises(ArgumentError):
            de.marginal_x(-0.1)


@pytest.fixture(scope="module")
def cond_de():
    x, y = uniform_sample(800, seed=4)
    return fit_kde(x, y, UNIT_DOMAIN)


class TestConditionals:
    def test_marginal_near_one_interior(self, cond_de):
        for x in (0.3, 0.5, 0.7):
            assert cond_de.marginal_x(x) == pytest.approx(1.0, abs=0.2)

    def test_marginal_floor(self, cond_de):
        assert cond_de.marginal_x(0.0) >= 0.99 * cond_de.floor * cond_de.domain.y.width

    def test_constant_phi(self, cond_de):
        assert cond_de.conditional_mean(lambda y: 5.0, (5.0 - 1e-9, 5.0 + 1e-9), 0.4) == pytest.approx(5.0)
        assert cond_de.conditional_second_moment(lambda y: 2.0, (2.0 - 1e-9, 2.0 + 1e-9), 0.4) == pytest.approx(4.0)

    def test_independent_mean_and_second_moment(self, cond_de):
        # X independent of Y uniform: m ~ 1/2, v ~ 1/3
        for x in (0.4, 0.6):
            assert cond_de.conditional_mean(lambda y: y, (0.0, 1.0), x) == pytest.approx(0.5, abs=0.07)
            assert cond_de.conditional_second_moment(lambda y: y, (0.0, 1.0), x) == pytest.approx(1 / 3, abs=0.07)

    def test_jensen(self, cond_de):
        for x in (0.0, 0.25, 0.5, 0.75, 1.0):
            m = cond_de.conditional_mean(lambda y: y, (0.0, 1.0), x)
            v = cond_de.conditional_second_moment(lambda y: y, (0.0, 1.0), x)
            assert v >= m * m - 1e-9

    def test_diagonal_data_mean_tracks_x(self):
        rng = np.random.Generator(np.random.Philox(key=6))
        x = rng.random(1000)
        de = fit_kde(x, x.copy(), UNIT_DOMAIN)
        hx, hy = de.bandwidths
        for q in (0.3, 0.7):
            m = de.conditional_mean(lambda y: y, (0.0, 1.0), q)
            assert abs(m - q) <= hx + hy

    def test_cache_matches_scalar_evaluators(self, cond_de):
        # the cache integrates in y with a fixed Gauss grid, while the scalar
        # evaluators subdivide adaptively around the kernel kinks; they agree
        # to the Gauss-grid resolution, not to machine precision
        cache = cond_de.moment_cache(lambda y: y, (0.0, 1.0), nx=33, ny=64)
        for x in cache.xg[::16]:
            assert cache.marginal(x) == pytest.approx(cond_de.marginal_x(float(x)), abs=5e-3)
            assert cache.mean(x) == pytest.approx(
                cond_de.conditional_mean(lambda y: y, (0.0, 1.0), float(x)), abs=5e-3
            )
            assert cache.second_moment(x) == pytest.approx(
                cond_de.conditional_second_moment(lambda y: y, (0.0, 1.0), float(x)), abs=5e-3
            )


def test_consistency_in_n1():
    # sup-norm error on the interior decreases across preliminary sizes
    grid = np.linspace(0.2, 0.8, 9)
    errs = []
    for n1 in (100, 1000, 10_000):
        per_seed = []
        for seed in range(20):
            x, y = uniform_sample(n1, seed=seed)
            de = fit_kde(x, y, UNIT_DOMAIN)
            vals = de.pdf_grid(grid, grid)
            per_seed.append(np.max(np.abs(vals - 1.0)))
        errs.append(np.mean(per_seed))
    assert errs[0] > errs[1] > errs[2]


class TestSplitSizes:
    def test_examples(self):
        assert split_sizes(100) == (22, 78)
        assert split_sizes(40) == (20, 20)
        assert split_sizes(10_000) == (1086, 8914)

    def test_small_n_rejected(self):
        with pytest.raises(ConfigurationError):
            split_sizes(39)

    def test_partition(self):
        for n in (40, 57, 100, 1234):
            n1, n2 = split_sizes(n)
            assert n1 + n2 == n
            assert n1 >= 20 and n2 >= 3
