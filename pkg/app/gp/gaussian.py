"""Multivariate-normal densities, draws and the conjugate GP conditionals."""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
from scipy import linalg

from app.gp.kernels import CholeskyFactor, CovarianceLike, MeanFunction, as_factor, cholesky

_LOG_2PI = math.log(2.0 * math.pi)


def mvn_logpdf(
    y: np.ndarray,
    mean: MeanFunction,
    cov: CovarianceLike,
) -> Union[float, np.ndarray]:
    """Log N(y; mean, cov) through the Cholesky factor.

    ``y`` may be one vector (returns a float) or a stack of row vectors
    (returns one value per row).
    """
    factor = as_factor(cov)
    y = np.asarray(y, dtype=float)
    resid = (np.atleast_2d(y) - np.asarray(mean, dtype=float)).T
    if resid.shape[0] != factor.dim:
        raise ValueError(f"dimension mismatch: {resid.shape[0]} vs {factor.dim}")
    white = factor.whiten(resid)
    quad = np.einsum("ij,ij->j", white, white)
    out = -0.5 * (factor.dim * _LOG_2PI + factor.logdet + quad)
    return float(out[0]) if y.ndim == 1 else out


def sample_gp(
    mean: MeanFunction,
    cov: CovarianceLike,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """mean + L xi with xi standard normal; ``size`` stacks independent draws as rows."""
    factor = as_factor(cov)
    mean = np.asarray(mean, dtype=float)
    if size is None:
        return mean + factor.lower @ rng.standard_normal(factor.dim)
    xi = rng.standard_normal((size, factor.dim))
    return mean[None, :] + xi @ factor.lower.T


def gaussian_posterior(
    precision: np.ndarray,
    shift: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, CholeskyFactor]:
    """Mean and covariance of N(P^{-1} b, P^{-1}) plus the factor of the covariance."""
    prec_factor = cholesky(precision)
    cov = prec_factor.inverse
    mean = prec_factor.solve(shift)
    return mean, cov, cholesky(cov)


def theta_posterior_from_stats(
    total: np.ndarray,
    count: float,
    prior_mean: MeanFunction,
    c_theta: CovarianceLike,
    c_y: CovarianceLike,
) -> tuple[np.ndarray, np.ndarray, CholeskyFactor]:
    """Atom conditional from the sum of member curves and the effective member count."""
    theta_f, y_f = as_factor(c_theta), as_factor(c_y)
    precision = theta_f.inverse + count * y_f.inverse
    shift = theta_f.solve(np.asarray(prior_mean, dtype=float)) + y_f.solve(np.asarray(total, dtype=float))
    return gaussian_posterior(precision, shift)


def theta_full_conditional(
    curves: np.ndarray,
    prior_mean: MeanFunction,
    c_theta: CovarianceLike,
    c_y: CovarianceLike,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior of a cluster atom given its member curves.

    C_pos = (C_theta^{-1} + N_j C_y^{-1})^{-1},
    m_pos = C_pos (C_theta^{-1} m_theta + sum_i C_y^{-1} y_i).

    Args:
        curves: N_j x |X| member curves (N_j >= 1).
        prior_mean: m_theta on the grid.
        c_theta: Atom prior covariance.
        c_y: Observation covariance.
    """
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    if curves.shape[0] < 1:
        raise ValueError("an atom conditional needs at least one member curve")
    mean, cov, _ = theta_posterior_from_stats(
        curves.sum(axis=0), curves.shape[0], prior_mean, c_theta, c_y
    )
    return mean, cov


def marginal_loglik_new_cluster(
    y: np.ndarray,
    m_theta: MeanFunction,
    c_y: CovarianceLike,
    c_theta: CovarianceLike,
) -> float:
    """log p(y | m_theta, C_y + C_theta) with the atom integrated out.

    A 2-D ``y`` holds several curves sharing one atom (one area's days in a
    period); their joint marginal is evaluated at the atom posterior mean
    through p(y) = p(y | theta) p(theta) / p(theta | y).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        c_y_mat = c_y.matrix if isinstance(c_y, CholeskyFactor) else np.asarray(c_y)
        c_t_mat = c_theta.matrix if isinstance(c_theta, CholeskyFactor) else np.asarray(c_theta)
        return float(mvn_logpdf(y, m_theta, c_y_mat + c_t_mat))
    theta_f, y_f = as_factor(c_theta), as_factor(c_y)
    post_mean, _, post_f = theta_posterior_from_stats(y.sum(axis=0), y.shape[0], m_theta, theta_f, y_f)
    return float(
        np.sum(mvn_logpdf(y, post_mean, y_f))
        + mvn_logpdf(post_mean, m_theta, theta_f)
        - mvn_logpdf(post_mean, post_mean, post_f)
    )


def m_theta_full_conditional(
    atoms: np.ndarray,
    c_theta: CovarianceLike,
    m_m: MeanFunction,
    c_m: CovarianceLike,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior of the overall atom mean given K_n >= 1 atoms.

    C_pos = (K_n C_theta^{-1} + C_m^{-1})^{-1},
    m_pos = C_pos (C_theta^{-1} sum_j theta_j + C_m^{-1} m_m).
    """
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    theta_f, m_f = as_factor(c_theta), as_factor(c_m)
    precision = atoms.shape[0] * theta_f.inverse + m_f.inverse
    shift = theta_f.solve(atoms.sum(axis=0)) + m_f.solve(np.asarray(m_m, dtype=float))
    mean, cov, _ = gaussian_posterior(precision, shift)
    return mean, cov


class NewClusterMarginal:
    """log integral of the reduced likelihood exp(theta' P S - count/2 theta' P theta) over the atom prior.

    P = C_y^{-1}. The reduced form drops the terms that do not involve theta,
    which are shared by every candidate cluster of one area, so it can be
    compared directly with :meth:`existing` for clusters with a fixed atom.
    Lambda = count P + C_theta^{-1} is factorized once and reused for every
    area with the same ``count``.
    """

    def __init__(
        self,
        count: float,
        prior_mean: MeanFunction,
        c_theta: CovarianceLike,
        c_y: CovarianceLike,
    ):
        self.count = float(count)
        self.theta_f = as_factor(c_theta)
        self.y_f = as_factor(c_y)
        self.prior_mean = np.asarray(prior_mean, dtype=float)
        self._prior_shift = self.theta_f.solve(self.prior_mean)
        self.lam_f = cholesky(self.count * self.y_f.inverse + self.theta_f.inverse)
        self._const = -0.5 * (
            self.theta_f.logdet + self.lam_f.logdet + float(self.prior_mean @ self._prior_shift)
        )

    def shift(self, total: np.ndarray) -> np.ndarray:
        return self.y_f.solve(np.asarray(total, dtype=float)) + self._prior_shift

    def log_marginal(self, total: np.ndarray) -> float:
        b = self.shift(total)
        white = self.lam_f.whiten(b)
        return float(self._const + 0.5 * white @ white)

    def existing(self, total: np.ndarray, atoms: np.ndarray) -> np.ndarray:
        """Reduced log-likelihood of the area's curves under each fixed atom (rows of ``atoms``)."""
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        if atoms.shape[0] == 0:
            return np.zeros(0)
        p_total = self.y_f.solve(np.asarray(total, dtype=float))
        white = self.y_f.whiten(atoms.T)
        quad = np.einsum("ij,ij->j", white, white)
        return atoms @ p_total - 0.5 * self.count * quad

    def draw(self, total: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw a fresh atom from its posterior given the area's curves."""
        mean = self.lam_f.solve(self.shift(total))
        xi = rng.standard_normal(self.lam_f.dim)
        # Lambda = L L' so L'^{-1} xi has covariance Lambda^{-1}
        return mean + linalg.solve_triangular(self.lam_f.lower.T, xi, lower=False, check_finite=False)
