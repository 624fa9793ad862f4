import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from biaslin import distributions as ds
from biaslin.hermite import (
    CovarianceMatrix,
    covariance_from_distribution,
    gaussian_mc_moment,
    hermite_eval,
    hermite_product_expectation,
    quadratic_form_poly,
)
from biaslin.errors import ValidationError

F = Fraction


class TestHermiteEval:
    def test_low_degrees(self):
        x = 1.7
        assert hermite_eval(0, x) == 1.0
        assert hermite_eval(1, x) == x
        assert hermite_eval(2, x) == pytest.approx(x * x - 1)
        assert hermite_eval(3, x) == pytest.approx(x**3 - 3 * x)
        assert hermite_eval(4, x) == pytest.approx(x**4 - 6 * x * x + 3)

    def test_vectorized_matches_scalar(self):
        xs = np.linspace(-3, 3, 11)
        vec = hermite_eval(5, xs)
        for x, v in zip(xs, vec):
            assert v == pytest.approx(hermite_eval(5, float(x)))

    def test_degree_bounds(self):
        with pytest.raises(ValidationError):
            hermite_eval(-1, 0.0)
        with pytest.raises(ValidationError):
            hermite_eval(65, 0.0)


class TestCovarianceMatrix:
    def test_rejects_non_unit_diagonal(self):
        with pytest.raises(ValidationError):
            CovarianceMatrix(k=2, entries=((F(2), F(0)), (F(0), F(1))))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            CovarianceMatrix(k=2, entries=((F(1), F(1, 2)), (F(1, 3), F(1))))

    def test_rejects_indefinite(self):
        with pytest.raises(ValidationError):
            CovarianceMatrix.from_offdiagonal(3, F(-3, 4))

    def test_sqrt_factor_reconstructs(self):
        sigma = CovarianceMatrix.from_offdiagonal(4, F(1, 6))
        L = sigma.sqrt_factor()
        assert np.allclose(L @ L.T, sigma.as_float())

    def test_sqrt_factor_singular_psd(self):
        # rho = -1/(k-1) sits on the PSD boundary; eigh fallback applies
        sigma = CovarianceMatrix.from_offdiagonal(3, F(-1, 2))
        L = sigma.sqrt_factor()
        assert np.allclose(L @ L.T, sigma.as_float(), atol=1e-10)

    def test_zero_row_detection(self):
        entries = (
            (F(1), F(0), F(0)),
            (F(0), F(1), F(1, 2)),
            (F(0), F(1, 2), F(1)),
        )
        sigma = CovarianceMatrix(k=3, entries=entries)
        assert sigma.v_has_zero_row() == [0]


class TestFromDistribution:
    def test_dfh19_offdiagonal_sixth(self):
        d = ds.make_dfh19(F(2, 5))
        sigma = covariance_from_distribution(d)
        for i, j in itertools.combinations(range(4), 2):
            assert sigma.entries[i][j] == F(1, 6)

    def test_pairwise_independent_gives_identity(self):
        d = ds.make_case_distribution(4, F(2, 5))
        sigma = covariance_from_distribution(d)
        for i in range(4):
            for j in range(4):
                assert sigma.entries[i][j] == (1 if i == j else 0)
        assert sigma.v_has_zero_row() == [0, 1, 2, 3]


class TestExactMoments:
    def test_pair_identity(self):
        for rho in (F(1, 6), F(-1, 3)):
            sigma = CovarianceMatrix.from_offdiagonal(2, rho)
            assert hermite_product_expectation((1, 1), sigma) == rho
            assert hermite_product_expectation((2, 2), sigma) == 2 * rho * rho
            assert hermite_product_expectation((3, 3), sigma) == 6 * rho**3

    def test_mixed_degrees_vanish_for_pairs(self):
        # E[H_a(X) H_b(Y)] = 0 for a != b under any joint Gaussian
        sigma = CovarianceMatrix.from_offdiagonal(2, F(1, 3))
        assert hermite_product_expectation((1, 2), sigma) == 0
        assert hermite_product_expectation((2, 4), sigma) == 0

    def test_odd_total_degree_vanishes(self):
        sigma = CovarianceMatrix.from_offdiagonal(3, F(1, 4))
        for s in itertools.product(range(4), repeat=3):
            if sum(s) % 2 == 1:
                assert hermite_product_expectation(s, sigma) == 0

    def test_equicorrelated_quartic(self):
        sigma = CovarianceMatrix.from_offdiagonal(4, F(1, 6))
        assert hermite_product_expectation((1, 1, 1, 1), sigma) == F(1, 12)

    def test_identity_covariance_factorizes(self):
        sigma = CovarianceMatrix.from_offdiagonal(3, F(0))
        # independent coordinates: any degree >= 1 anywhere kills the product
        assert hermite_product_expectation((1, 1, 0), sigma) == 0
        assert hermite_product_expectation((2, 0, 0), sigma) == 0
        assert hermite_product_expectation((0, 0, 0), sigma) == 1

    def test_block_diagonal_factorization(self):
        rho, tau = F(1, 3), F(1, 5)
        entries = (
            (F(1), rho, F(0), F(0)),
            (rho, F(1), F(0), F(0)),
            (F(0), F(0), F(1), tau),
            (F(0), F(0), tau, F(1)),
        )
        sigma = CovarianceMatrix(k=4, entries=entries)
        lhs = hermite_product_expectation((1, 1, 2, 2), sigma)
        a = hermite_product_expectation((1, 1), CovarianceMatrix.from_offdiagonal(2, rho))
        b = hermite_product_expectation((2, 2), CovarianceMatrix.from_offdiagonal(2, tau))
        assert lhs == a * b

    def test_generating_function_identity(self):
        """sum over |s| = 2d of E[prod H_{s_i}] prod t^s / s! equals the
        degree-d coefficient structure of exp(t^T V t / 2), checked at a point."""
        rho = F(1, 6)
        sigma = CovarianceMatrix.from_offdiagonal(3, rho)
        t = (F(1, 2), F(1, 3), F(1, 5))
        V = sigma.v_matrix()
        qval = sum(
            V[i][j] * t[i] * t[j] for i in range(3) for j in range(3)
        )
        for d in range(0, 7):  # total degree up to 12
            lhs = F(0)
            for s in itertools.product(range(2 * d + 1), repeat=3):
                if sum(s) != 2 * d:
                    continue
                m = hermite_product_expectation(s, sigma)
                if m == 0:
                    continue
                term = m
                for ti, si in zip(t, s):
                    term *= ti**si / F(_fact(si))
                lhs += term
            rhs = (qval / 2) ** d / F(_fact(d))
            assert lhs == rhs


def _fact(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


class TestMonteCarlo:
    def test_mc_matches_exact(self):
        sigma = CovarianceMatrix.from_offdiagonal(4, F(1, 6))
        exact = float(hermite_product_expectation((1, 1, 1, 1), sigma))
        est, se = gaussian_mc_moment((1, 1, 1, 1), sigma, 400_000, seed=12)
        assert abs(est - exact) <= 4 * se

    def test_sharding_is_deterministic(self):
        sigma = CovarianceMatrix.from_offdiagonal(3, F(1, 4))
        a = gaussian_mc_moment((1, 1, 2), sigma, 50_000, seed=5, shards=4)
        b = gaussian_mc_moment((1, 1, 2), sigma, 50_000, seed=5, shards=4)
        assert a == b

    def test_random_gram_matrices_agree(self):
        """Random rational correlation matrices from +-1-vector Grams."""
        rng = random.Random(21)
        for trial in range(5):
            m, k = 8, 3
            vecs = [[rng.choice((-1, 1)) for _ in range(m)] for _ in range(k)]
            entries = tuple(
                tuple(
                    F(sum(a * b for a, b in zip(vecs[i], vecs[j])), m)
                    if i != j
                    else F(1)
                    for j in range(k)
                )
                for i in range(k)
            )
            sigma = CovarianceMatrix(k=k, entries=entries)
            s = tuple(rng.randint(0, 3) for _ in range(k))
            exact = float(hermite_product_expectation(s, sigma))
            est, se = gaussian_mc_moment(s, sigma, 200_000, seed=100 + trial)
            assert abs(est - exact) <= 4 * max(se, 1e-12)


def test_quadratic_form_poly_diagonal_free():
    sigma = CovarianceMatrix.from_offdiagonal(3, F(1, 6))
    q = quadratic_form_poly(sigma.v_matrix())
    for e in q.terms:
        assert max(e) == 1  # V has zero diagonal, so no square terms
