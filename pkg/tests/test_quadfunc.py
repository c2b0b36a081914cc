import numpy as np
import pytest

from effsens import (
    ArgumentError,
    BasisIndexSet,
    ConfigurationError,
    Interval,
    LegendreBasis1D,
    SymmetricKernel,
    coefficient_vectors,
    estimate_theta,
    gauss_rule,
    hoeffding_decompose,
    lambda_plugin,
)
from effsens.quadfunc import c_matrix

UNIT = Interval(0.0, 1.0)


def unit_bases(k):
    return LegendreBasis1D(UNIT, k - 1), LegendreBasis1D(UNIT, k - 1)


def const_kernel(value):
    return SymmetricKernel(
        fn=lambda x, y1, y2: value * np.ones(np.broadcast(x, y1, y2).shape),
        sup_bound=abs(value),
    )


def polynomial_kernel():
    """A non-trivial smooth kernel, symmetric in (y1, y2)."""
    return SymmetricKernel(
        fn=lambda x, y1, y2: (1.0 + x) * (1.0 + y1 * y2) + 0.5 * (y1 + y2),
        sup_bound=6.0,
    )


def uniform_density(x, y):
    return np.ones(np.broadcast(x, y).shape)


def random_sample(n, seed):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.random(n), rng.random(n)


def brute_force_theta(x, y, eta, M, bx, by, order=24):
    """Literal double-loop oracle, built from quadrature primitives only."""
    n = x.size
    ru = gauss_rule(order, by.interval)
    tx, ty = bx.table(x), by.table(y)
    tu = by.table(ru.nodes)
    rx3 = gauss_rule(order, bx.interval)
    p = np.array([[tx[j, ia] * ty[j, ib] for ia, ib in M.pairs] for j in range(n)])
    i_int = np.empty((n, M.size))
    for kk in range(n):
        ev = np.asarray(eta.fn(np.full(order, x[kk]), ru.nodes, np.full(order, y[kk])), float)
        ev = np.broadcast_to(ev, (order,))
        for col, (ia, ib) in enumerate(M.pairs):
            i_int[kk, col] = np.sum(ru.weights * ev * tu[:, ib]) * tx[kk, ia]
    c = np.empty((M.size, M.size))
    for a, (ia, ib) in enumerate(M.pairs):
        for b, (ja, jb) in enumerate(M.pairs):
            acc = 0.0
            for gx, wx in zip(rx3.nodes, rx3.weights):
                ev = np.asarray(
                    eta.fn(
                        np.full((order, order), gx),
                        ru.nodes[:, None] * np.ones(order),
                        ru.nodes[None, :] * np.ones((order, 1)),
                    ),
                    float,
                )
                ev = np.broadcast_to(ev, (order, order))
                inner = (ru.weights * tu[:, ib]) @ ev @ (ru.weights * tu[:, jb])
                acc += wx * bx.eval(ia, gx) * bx.eval(ja, gx) * inner
            c[a, b] = acc
    t1 = 0.0
    t2 = 0.0
    for j in range(n):
        for k in range(n):
            if j == k:
                continue
            t1 += float(p[j] @ i_int[k])
            t2 += float(p[j] @ c @ p[k])
    return (2.0 * t1 - t2) / (n * (n - 1))


class TestSymmetricKernel:
    def test_symmetric_passes(self):
        polynomial_kernel().check_symmetry(UNIT, UNIT)

    def test_asymmetric_rejected(self):
        bad = SymmetricKernel(fn=lambda x, y1, y2: y1 - 2 * y2, sup_bound=3.0)
        with pytest.raises(ArgumentError):
            bad.check_symmetry(UNIT, UNIT)


class TestCoefficients:
    def test_c_matrix_unit_kernel(self):
        # eta = 1 factorizes: c_ii' = delta(i_a, i'_a) * [i_b == 0] * [i'_b == 0]
        M = BasisIndexSet(k_x=2, k_y=2)
        bx, by = unit_bases(2)
        C = c_matrix(const_kernel(1.0), M, bx, by, order=16)
        expected = np.zeros((4, 4))
        for a, (ia, ib) in enumerate(M.pairs):
            for b, (ja, jb) in enumerate(M.pairs):
                expected[a, b] = float(ia == ja and ib == 0 and jb == 0)
        np.testing.assert_allclose(C, expected, atol=1e-12)

    def test_unit_kernel_uniform_f_vectors(self):
        M = BasisIndexSet(k_x=2, k_y=2)
        bx, by = unit_bases(2)
        A, B, C = coefficient_vectors(const_kernel(1.0), M, bx, by, uniform_density, order=16)
        expected_a = np.array([1.0 if p == (0, 0) else 0.0 for p in M.pairs])
        np.testing.assert_allclose(A, expected_a, atol=1e-12)
        # g(x, y) = marginal of uniform = 1, so B = A
        np.testing.assert_allclose(B, A, atol=1e-12)

    def test_c_symmetric_for_symmetric_eta(self):
        M = BasisIndexSet(k_x=3, k_y=3)
        bx, by = unit_bases(3)
        C = c_matrix(polynomial_kernel(), M, bx, by, order=16)
        assert np.max(np.abs(C - C.T)) < 1e-12


class TestEstimateTheta:
    def test_zero_kernel(self):
        x, y = random_sample(30, 0)
        M = BasisIndexSet(k_x=2, k_y=2)
        bx, by = unit_bases(2)
        res = estimate_theta(x, y, const_kernel(0.0), M, bx, by, order=8)
        assert res.value == 0.0
        assert res.value == res.term_linear_pair - res.term_bilinear

    def test_unit_kernel_uniform_truth(self):
        # theta = integral of f_X(x)^2 dx = 1 for the uniform density
        M = BasisIndexSet(k_x=5, k_y=5)
        bx, by = unit_bases(5)
        eta = const_kernel(1.0)
        vals = []
        for seed in range(200):
            x, y = random_sample(500, seed)
            vals.append(estimate_theta(x, y, eta, M, bx, by, order=12).value)
        assert np.mean(vals) == pytest.approx(1.0, abs=0.02)

    def test_matches_brute_force(self):
        # acceptance criterion: pair-sum path equals the literal double loop
        for n, seed, k in ((5, 0, 2), (17, 1, 3), (60, 2, 2)):
            x, y = random_sample(n, seed)
            M = BasisIndexSet(k_x=k, k_y=k)
            bx, by = unit_bases(k)
            eta = polynomial_kernel()
            fast = estimate_theta(x, y, eta, M, bx, by, order=24).value
            slow = brute_force_theta(x, y, eta, M, bx, by, order=24)
            assert fast == pytest.approx(slow, abs=1e-12, rel=1e-12)

    def test_exchangeability(self):
        x, y = random_sample(40, 5)
        M = BasisIndexSet(k_x=3, k_y=3)
        bx, by = unit_bases(3)
        eta = polynomial_kernel()
        base = estimate_theta(x, y, eta, M, bx, by, order=12).value
        rng = np.random.Generator(np.random.Philox(key=9))
        for _ in range(3):
            perm = rng.permutation(40)
            assert estimate_theta(x[perm], y[perm], eta, M, bx, by, order=12).value == pytest.approx(
                base, rel=1e-12
            )

    def test_point_outside_domain_named(self):
        x, y = random_sample(10, 3)
        x[4] = 1.5
        M = BasisIndexSet(k_x=2, k_y=2)
        bx, by = unit_bases(2)
        with pytest.raises(ArgumentError, match="row 4"):
            estimate_theta(x, y, polynomial_kernel(), M, bx, by, order=8)

    def test_tiny_sample_rejected(self):
        M = BasisIndexSet(k_x=2, k_y=2)
        bx, by = unit_bases(2)
        with pytest.raises(ConfigurationError):
            estimate_theta(np.array([0.1, 0.2]), np.array([0.3, 0.4]),
                           polynomial_kernel(), M, bx, by, order=8)


class TestHoeffding:
    def test_identity_for_random_references(self):
        eta = polynomial_kernel()
        M = BasisIndexSet(k_x=3, k_y=3)
        bx, by = unit_bases(3)
        rng = np.random.Generator(np.random.Philox(key=11))
        for trial in range(10):
            x, y = random_sample(25, 100 + trial)
            a, b = rng.random(2) + 0.5
            ref = lambda xx, yy: a + b * xx * yy  # arbitrary positive reference
            theta = estimate_theta(x, y, eta, M, bx, by, order=16).value
            terms = hoeffding_decompose(x, y, eta, M, bx, by, ref, order=16)
            assert terms.total == pytest.approx(theta, rel=1e-9, abs=1e-12)

    def test_zero_kernel_all_terms_zero(self):
        x, y = random_sample(12, 2)
        M = BasisIndexSet(k_x=2, k_y=2)
        bx, by = unit_bases(2)
        terms = hoeffding_decompose(x, y, const_kernel(0.0), M, bx, by, uniform_density, order=8)
        assert terms.un_k == terms.pn_l == terms.headline == 0.0


class TestLambdaPlugin:
    def test_zero_kernel(self):
        assert lambda_plugin(uniform_density, const_kernel(0.0), UNIT, UNIT, order=8) == 0.0

    def test_unit_kernel_uniform_f(self):
        # g = marginal = 1 everywhere: zero variance
        assert lambda_plugin(uniform_density, const_kernel(1.0), UNIT, UNIT, order=16) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_nonnegative(self):
        lam = lambda_plugin(lambda x, y: 1.0 + 0.3 * np.cos(np.pi * x) * np.ones_like(y),
                            polynomial_kernel(), UNIT, UNIT, order=16)
        assert lam >= 0.0
