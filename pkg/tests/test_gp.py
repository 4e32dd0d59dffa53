import math

import numpy as np
import pytest
from scipy import stats

from app.errors import NumericError
from app.gp import (
    GpSpec,
    NewClusterMarginal,
    cholesky,
    gram,
    m_theta_full_conditional,
    marginal_loglik_new_cluster,
    mvn_logpdf,
    rbf_correlation,
    sample_gp,
    theta_full_conditional,
    theta_posterior_from_stats,
)

GRID = np.array([1.0, 2.0, 3.0, 4.0])


@pytest.fixture
def c_y():
    return GpSpec(GRID, eta=1.3, phi=1.5)


@pytest.fixture
def c_theta():
    return GpSpec(GRID, eta=2.0, phi=2.0)


class TestKernel:
    def test_rbf_value(self):
        spec = GpSpec(np.array([0.0, 1.0]), eta=2.0, phi=1.0)
        assert spec.gram[0, 1] == pytest.approx(4.0 * math.exp(-1.0))
        assert spec.gram[0, 0] == pytest.approx(4.0 * (1.0 + 1e-8))

    def test_correlation_diagonal(self):
        np.testing.assert_allclose(np.diag(rbf_correlation(GRID, 0.7)), 1.0)

    def test_jitter_scales_with_eta(self):
        spec = GpSpec(GRID, eta=3.0, phi=1.0)
        assert spec.jitter == pytest.approx(9e-8)
        assert gram(spec)[1, 1] == pytest.approx(9.0 + 9e-8)

    @pytest.mark.parametrize("eta", [0.1, 1.0, 10.0])
    @pytest.mark.parametrize("phi", [0.1, 1.0, 10.0, 100.0])
    def test_factorization_over_parameter_range(self, eta, phi):
        spec = GpSpec(np.arange(1.0, 25.0), eta=eta, phi=phi)
        factor = spec.factor
        assert np.isfinite(factor.logdet)
        np.testing.assert_allclose(factor.lower @ factor.lower.T, factor.matrix, atol=1e-8 * eta * eta)

    def test_long_range_gram_is_constant(self):
        spec = GpSpec(GRID, eta=1.5, phi=1e9)
        np.testing.assert_allclose(gram(spec), np.full((4, 4), 2.25), rtol=1e-6)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            GpSpec(GRID, eta=0.0, phi=1.0)
        with pytest.raises(ValueError):
            GpSpec(np.array([1.0, 1.0]), eta=1.0, phi=1.0)

    def test_indefinite_matrix_fails(self):
        with pytest.raises(NumericError):
            cholesky(np.array([[1.0, 0.0], [0.0, -5.0]]), jitter=1e-12, retries=2)


class TestDensities:
    def test_logpdf_matches_scipy(self, c_y, rng):
        y = rng.normal(size=4)
        mean = rng.normal(size=4)
        expected = stats.multivariate_normal(mean, c_y.factor.matrix).logpdf(y)
        assert mvn_logpdf(y, mean, c_y.factor) == pytest.approx(expected, abs=1e-10)

    def test_logpdf_stacked_rows(self, c_y, rng):
        y = rng.normal(size=(5, 4))
        out = mvn_logpdf(y, np.zeros(4), c_y.factor)
        assert out.shape == (5,)
        for row, value in zip(y, out):
            assert value == pytest.approx(mvn_logpdf(row, np.zeros(4), c_y.factor))

    def test_sample_moments(self, c_theta):
        rng = np.random.default_rng(2)
        draws = sample_gp(np.ones(4), c_theta.factor, rng, size=40000)
        np.testing.assert_allclose(draws.mean(axis=0), 1.0, atol=0.05)
        np.testing.assert_allclose(np.cov(draws.T), c_theta.gram, atol=0.15)


    def test_logpdf_translation_invariant(self, c_y, rng):
        y = rng.normal(size=4)
        mean = rng.normal(size=4)
        shift = rng.normal(scale=10.0, size=4)
        assert mvn_logpdf(y + shift, mean + shift, c_y.factor) == pytest.approx(
            mvn_logpdf(y, mean, c_y.factor), abs=1e-9
        )

    def test_draws_repeat_for_a_seed(self, c_theta):
        first = sample_gp(np.ones(4), c_theta.factor, np.random.default_rng(11), size=3)
        second = sample_gp(np.ones(4), c_theta.factor, np.random.default_rng(11), size=3)
        assert np.array_equal(first, second)
        assert np.array_equal(
            sample_gp(np.zeros(4), c_theta.factor, np.random.default_rng(11)),
            sample_gp(np.zeros(4), c_theta.factor, np.random.default_rng(11)),
        )


class TestConditionals:
    def test_atom_conditional_dense(self, c_y, c_theta, rng):
        curves = rng.normal(size=(3, 4))
        m = rng.normal(size=4)
        mean, cov = theta_full_conditional(curves, m, c_theta.factor, c_y.factor)
        ct_inv = np.linalg.inv(c_theta.factor.matrix)
        cy_inv = np.linalg.inv(c_y.factor.matrix)
        expected_cov = np.linalg.inv(ct_inv + 3 * cy_inv)
        expected_mean = expected_cov @ (ct_inv @ m + cy_inv @ curves.sum(axis=0))
        np.testing.assert_allclose(cov, expected_cov, atol=1e-10)
        np.testing.assert_allclose(mean, expected_mean, atol=1e-10)

    def test_atom_conditional_many_members_is_sample_mean(self, c_y, c_theta, rng):
        curves = 3.0 + rng.normal(size=(10_000, 4))
        ybar = curves.mean(axis=0)
        m = np.zeros(4)
        mean, cov = theta_full_conditional(curves, m, c_theta.factor, c_theta.factor)
        np.testing.assert_allclose(mean, (m + curves.sum(axis=0)) / 10_001, atol=1e-9)
        np.testing.assert_allclose(mean, ybar, atol=1e-3)
        np.testing.assert_allclose(cov, c_theta.factor.matrix / 10_001, atol=1e-9)
        mean, _ = theta_full_conditional(curves, m, c_theta.factor, c_y.factor)
        np.testing.assert_allclose(mean, ybar, atol=0.05)

    def test_atom_conditional_needs_members(self, c_y, c_theta):
        with pytest.raises(ValueError):
            theta_full_conditional(np.zeros((0, 4)), np.zeros(4), c_theta.factor, c_y.factor)

    def test_m_theta_dense(self, c_theta):
        atoms = np.array([[0.5, 1.0], [-0.5, 0.2]])
        c_t = np.array([[2.0, 0.3], [0.3, 1.0]])
        c_m = np.array([[10.0, 0.0], [0.0, 5.0]])
        m_m = np.array([0.5, 0.5])
        mean, cov = m_theta_full_conditional(atoms, c_t, m_m, c_m)
        expected_cov = np.linalg.inv(2 * np.linalg.inv(c_t) + np.linalg.inv(c_m))
        expected_mean = expected_cov @ (np.linalg.inv(c_t) @ atoms.sum(axis=0) + np.linalg.inv(c_m) @ m_m)
        np.testing.assert_allclose(cov, expected_cov, atol=1e-10)
        np.testing.assert_allclose(mean, expected_mean, atol=1e-10)

    def test_m_theta_vague_prior_is_atom_average(self, c_theta, rng):
        atoms = rng.normal(size=(3, 4))
        mean, _ = m_theta_full_conditional(atoms, c_theta.factor, np.zeros(4), 1e8 * np.eye(4))
        np.testing.assert_allclose(mean, atoms.mean(axis=0), atol=1e-5)


class TestNewClusterMarginal:
    def test_single_curve_marginal(self, c_y, c_theta, rng):
        y = rng.normal(size=4)
        m = rng.normal(size=4)
        expected = stats.multivariate_normal(m, c_y.factor.matrix + c_theta.factor.matrix).logpdf(y)
        assert marginal_loglik_new_cluster(y, m, c_y.factor, c_theta.factor) == pytest.approx(expected, abs=1e-9)

    def test_several_curves_share_one_atom(self, c_y, c_theta, rng):
        y = rng.normal(size=(3, 4))
        m = rng.normal(size=4)
        ct, cy = c_theta.factor.matrix, c_y.factor.matrix
        joint = np.kron(np.ones((3, 3)), ct) + np.kron(np.eye(3), cy)
        expected = stats.multivariate_normal(np.tile(m, 3), joint).logpdf(y.reshape(-1))
        assert marginal_loglik_new_cluster(y, m, c_y.factor, c_theta.factor) == pytest.approx(expected, abs=1e-8)

    def test_reduced_form_plus_shared_terms(self, c_y, c_theta, rng):
        y = rng.normal(size=(3, 4))
        m = rng.normal(size=4)
        shared = float(np.sum(mvn_logpdf(y, np.zeros(4), c_y.factor)))
        marginal = NewClusterMarginal(3, m, c_theta.factor, c_y.factor)
        full = marginal_loglik_new_cluster(y, m, c_y.factor, c_theta.factor)
        assert marginal.log_marginal(y.sum(axis=0)) + shared == pytest.approx(full, abs=1e-8)

    def test_existing_atoms(self, c_y, c_theta, rng):
        y = rng.normal(size=(2, 4))
        atoms = rng.normal(size=(3, 4))
        shared = float(np.sum(mvn_logpdf(y, np.zeros(4), c_y.factor)))
        marginal = NewClusterMarginal(2, np.zeros(4), c_theta.factor, c_y.factor)
        got = marginal.existing(y.sum(axis=0), atoms)
        for value, atom in zip(got, atoms):
            expected = float(np.sum(mvn_logpdf(y, atom, c_y.factor)))
            assert value + shared == pytest.approx(expected, abs=1e-8)
        assert marginal.existing(y.sum(axis=0), np.zeros((0, 4))).shape == (0,)

    def test_zero_count_is_prior(self, c_y, c_theta):
        marginal = NewClusterMarginal(0, np.ones(4), c_theta.factor, c_y.factor)
        assert marginal.log_marginal(np.zeros(4)) == pytest.approx(0.0, abs=1e-8)

    def test_draw_matches_posterior(self, c_y, c_theta):
        rng = np.random.default_rng(9)
        y = np.array([[1.0, 0.5, 0.0, -0.5], [1.2, 0.4, 0.1, -0.3]])
        m = np.full(4, 0.5)
        marginal = NewClusterMarginal(2, m, c_theta.factor, c_y.factor)
        draws = np.array([marginal.draw(y.sum(axis=0), rng) for _ in range(20000)])
        mean, cov, _ = theta_posterior_from_stats(y.sum(axis=0), 2, m, c_theta.factor, c_y.factor)
        np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.04)
        np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.05)
