"""Gibbs and Metropolis-Hastings updates of the per-period GP mixture.

One sweep visits, for each period, the atoms and then every area's
assignment; then the observation scale eta_y, each period's eta_theta and
m_theta; and finally the Metropolis block (tau, alpha, beta, phi_theta per
period, then phi_y).

Period l works on residuals r_it = y_it - sum_{l' != l} w_tl' theta_{z_il', l'}
over the days with w_tl = 1. Only the per-area sums of those residuals enter
the conditionals, so they are computed once per period.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from app.errors import NumericError, PartitionDomainError
from app.gp import NewClusterMarginal, m_theta_full_conditional, mvn_logpdf, sample_gp, theta_posterior_from_stats
from app.models import FunctionalDataset, ModelVariant, SgdpParams, canonical_labels
from app.partition import AssignmentPrior
from app.partition.sgdp import sequential_log_terms
from app.sampler.chain_config import ChainConfig
from app.sampler.state import McmcState, initial_state

logger = logging.getLogger(__name__)


class GibbsSampler:
    """Holds one chain's state and applies the full-conditional updates in place."""

    def __init__(
        self,
        data: FunctionalDataset,
        config: ChainConfig,
        state: Optional[McmcState] = None,
    ):
        self.data = data
        self.config = config
        self.priors = config.priors
        self.state = initial_state(data, config) if state is None else state
        self.state.validate(data.n)
        adj = data.adjacency if config.model.uses_similarity else None
        self._assignment_priors = [
            AssignmentPrior(p.params, adj, config.conditional_mode) for p in self.state.periods
        ]
        self._m_m = np.full(data.d, self.priors.m_m)
        self._c_m = self.priors.c_m * np.eye(data.d)
        self.proposed: Counter[str] = Counter()
        self.accepted: Counter[str] = Counter()
        if config.conditional_mode.is_approximate:
            logger.warning("treat-as-last assignment conditionals are approximate")

    @property
    def approximate(self) -> bool:
        return self.config.conditional_mode.is_approximate

    def acceptance_rates(self) -> dict[str, float]:
        return {key: self.accepted[key] / n for key, n in sorted(self.proposed.items()) if n}

    # ------------------------------------------------------------------
    # Residual bookkeeping
    # ------------------------------------------------------------------

    def period_sums(self, ell: int) -> tuple[np.ndarray, int]:
        """Per-area sums of period-``ell`` residuals (n x |X|) and the number of active days."""
        if not self.config.use_likelihood:
            return np.zeros((self.data.n, self.data.d)), 0
        days = self.data.period_days(ell)
        w = self.data.w[days].astype(float)
        w[:, ell] = 0.0
        others = np.einsum("tl,lid->itd", w, self.state.period_curves())
        resid = self.data.y[:, days, :] - others
        return resid.sum(axis=1), int(days.size)

    def residuals(self) -> np.ndarray:
        """y - mu over every area and day, shape n x T x |X|."""
        return self.data.y - self.state.mean_surface(self.data.w)

    # ------------------------------------------------------------------
    # Sweep
    # ------------------------------------------------------------------

    def sweep(self, rng: np.random.Generator) -> None:
        n = self.data.n
        for ell in range(self.data.M):
            totals, count = self.period_sums(ell)
            self.update_atoms(ell, rng, totals, count)
            marginal = self.new_cluster_marginal(ell, count)
            self._assignment_priors[ell].reset()
            order = rng.permutation(n) if self.config.permute_order else range(n)
            for i in order:
                self.update_assignment(ell, int(i), rng, totals, marginal)
        self.update_eta_y(rng)
        for ell in range(self.data.M):
            self.update_eta_theta(ell, rng)
            self.update_m_theta(ell, rng)
        self.update_hyperparameters(rng)

    # ------------------------------------------------------------------
    # Conjugate updates
    # ------------------------------------------------------------------

    def update_atoms(self, ell: int, rng: np.random.Generator, totals: np.ndarray, count: int) -> None:
        """Redraw every atom of period ``ell`` from its Gaussian full conditional."""
        p = self.state.periods[ell]
        y_f = self.state.y_spec.factor
        theta_f = p.theta_spec.factor
        sizes = np.bincount(p.labels, minlength=p.k)
        cluster_totals = np.zeros((p.k, self.data.d))
        np.add.at(cluster_totals, p.labels, totals)
        atoms = np.empty_like(p.atoms)
        for j in range(p.k):
            mean, _, post_f = theta_posterior_from_stats(
                cluster_totals[j], sizes[j] * count, p.m_theta, theta_f, y_f
            )
            atoms[j] = sample_gp(mean, post_f, rng)
        p.atoms = atoms

    def new_cluster_marginal(self, ell: int, count: int) -> NewClusterMarginal:
        p = self.state.periods[ell]
        return NewClusterMarginal(count, p.m_theta, p.theta_spec.factor, self.state.y_spec.factor)

    def update_assignment(
        self,
        ell: int,
        i: int,
        rng: np.random.Generator,
        totals: np.ndarray,
        marginal: NewClusterMarginal,
    ) -> None:
        """Redraw z_{i, ell} given every other assignment of the period.

        A new cluster gets its atom from the posterior given area i's curves;
        a cluster emptied by the move disappears and labels are re-canonicalized.
        """
        p = self.state.periods[ell]
        others, atoms, log_w = self.assignment_log_weights(ell, i, totals, marginal)
        k = atoms.shape[0]
        probs = np.exp(log_w - logsumexp(log_w))
        c = int(rng.choice(k + 1, p=probs / probs.sum()))
        if c == k:
            atoms = np.vstack([atoms, marginal.draw(totals[i], rng)])
        p.relabel(np.insert(others, i, c), atoms)
        self._assignment_priors[ell].move(i, p.labels)

    def assignment_log_weights(
        self,
        ell: int,
        i: int,
        totals: np.ndarray,
        marginal: NewClusterMarginal,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unnormalized log weights of z_{i, ell} over the other areas' clusters and a new one.

        Returns:
            (canonical labels of the other areas, their atoms, log weights of length k+1)
        """
        p = self.state.periods[ell]
        others, old_of_new = canonical_labels(np.delete(p.labels, i))
        atoms = p.atoms[old_of_new]
        k = atoms.shape[0]
        log_w = self._assignment_priors[ell].log_weights_at(i, p.labels)
        log_w[:k] += marginal.existing(totals[i], atoms)
        log_w[k] += marginal.log_marginal(totals[i])
        if not np.all(np.isfinite(log_w)):
            raise NumericError(f"non-finite assignment weights for area {i}, period {ell}")
        return others, atoms, log_w

    def _eta_sq_draw(self, quad_r: float, count: int, rng: np.random.Generator) -> float:
        # eta^2 ~ IG((a + count) / 2, (b + quad_r) / 2)
        shape = 0.5 * (self.priors.a_eta + count)
        rate = 0.5 * (self.priors.b_eta + quad_r)
        return float(rate / rng.gamma(shape))

    def update_eta_y(self, rng: np.random.Generator) -> None:
        spec = self.state.y_spec
        if self.config.use_likelihood:
            resid = self.residuals().reshape(-1, self.data.d)
            white = spec.factor.whiten(resid.T)
            quad_r = spec.eta * spec.eta * float(np.sum(white * white))
            count = resid.size
        else:
            quad_r, count = 0.0, 0
        eta_sq = self._eta_sq_draw(quad_r, count, rng)
        self.state.y_spec = spec.with_(eta=math.sqrt(eta_sq))

    def update_eta_theta(self, ell: int, rng: np.random.Generator) -> None:
        p = self.state.periods[ell]
        spec = p.theta_spec
        dev = p.atoms - p.m_theta[None, :]
        white = spec.factor.whiten(dev.T)
        quad_r = spec.eta * spec.eta * float(np.sum(white * white))
        eta_sq = self._eta_sq_draw(quad_r, dev.size, rng)
        p.theta_spec = spec.with_(eta=math.sqrt(eta_sq))

    def update_m_theta(self, ell: int, rng: np.random.Generator) -> None:
        p = self.state.periods[ell]
        mean, cov = m_theta_full_conditional(p.atoms, p.theta_spec.factor, self._m_m, self._c_m)
        p.m_theta = sample_gp(mean, cov, rng)

    # ------------------------------------------------------------------
    # Metropolis-Hastings block
    # ------------------------------------------------------------------

    def update_hyperparameters(self, rng: np.random.Generator) -> None:
        for ell in range(self.data.M):
            if self.config.model.uses_similarity:
                self.mh_update("tau", rng, ell)
            self.mh_update("alpha", rng, ell)
            if self.config.model is not ModelVariant.SDP:
                self.mh_update("beta", rng, ell)
            self.mh_update("phi_theta", rng, ell)
        self.mh_update("phi_y", rng)

    def mh_update(self, param: str, rng: np.random.Generator, ell: Optional[int] = None) -> bool:
        """One random-walk step on ``param`` (of period ``ell`` unless it is phi_y).

        Returns:
            True when the proposal was accepted.
        """
        if param == "phi_y":
            current = self.state.y_spec.phi
            target = self._phi_y_log_target
            key = "phi_y"
        elif param == "phi_theta":
            current = self.state.periods[ell].theta_spec.phi
            target = lambda phi: self._phi_theta_log_target(ell, phi)  # noqa: E731
            key = f"phi_theta_{ell}"
        elif param in ("tau", "alpha", "beta"):
            current = getattr(self.state.periods[ell].params, param)
            target = lambda x: self._partition_log_target(ell, self._propose_params(ell, param, x))  # noqa: E731
            key = f"{param}_{ell}"
        else:
            raise ValueError(f"unknown parameter {param!r}")

        accepted, value = metropolis_step(current, self.config.proposals.sd(param), target, rng)
        self.proposed[key] += 1
        if not accepted:
            return False
        self.accepted[key] += 1
        if param == "phi_y":
            self.state.y_spec = self.state.y_spec.with_(phi=value)
        elif param == "phi_theta":
            p = self.state.periods[ell]
            p.theta_spec = p.theta_spec.with_(phi=value)
        else:
            params = self._propose_params(ell, param, value)
            self.state.periods[ell].params = params
            self._assignment_priors[ell].params = params
        return True

    def _propose_params(self, ell: int, param: str, value: float) -> Optional[SgdpParams]:
        """Partition parameters with one coordinate moved; None outside the support."""
        current = self.state.periods[ell].params
        try:
            if self.config.model is ModelVariant.SDP and param == "alpha":
                return SgdpParams.dirichlet(value, current.tau)
            return current.with_(**{param: value})
        except PartitionDomainError:
            return None

    def _partition_log_target(self, ell: int, params: Optional[SgdpParams]) -> float:
        if params is None:
            return -math.inf
        pr = self.priors
        log_p = pr.log_prior_alpha(params.alpha)
        if self.config.model is not ModelVariant.SDP:
            log_p += pr.log_prior_beta(params.beta)
        if params.uses_similarity:
            log_p += pr.log_prior_tau(params.tau)
        cached = self._assignment_priors[ell]
        if params.tau == cached.params.tau:
            weights = cached.weights
        else:
            weights = self.data.adjacency.similarity_weights(params)
        labels = self.state.periods[ell].labels
        return log_p + float(sequential_log_terms(labels, weights, params.alpha, params.beta).sum())

    def _phi_theta_log_target(self, ell: int, phi: float) -> float:
        if not phi > 0:
            return -math.inf
        p = self.state.periods[ell]
        spec = p.theta_spec.with_(phi=phi)
        return self.priors.log_prior_phi(phi) + float(np.sum(mvn_logpdf(p.atoms, p.m_theta, spec.factor)))

    def _phi_y_log_target(self, phi: float) -> float:
        if not phi > 0:
            return -math.inf
        log_p = self.priors.log_prior_phi(phi)
        if not self.config.use_likelihood:
            return log_p
        spec = self.state.y_spec.with_(phi=phi)
        resid = self.residuals().reshape(-1, self.data.d)
        return log_p + float(np.sum(mvn_logpdf(resid, np.zeros(self.data.d), spec.factor)))

    # ------------------------------------------------------------------
    # Recording
    # ------------------------------------------------------------------

    def scalars(self) -> dict[str, float]:
        """Current values of every traced scalar."""
        out: dict[str, float] = {}
        for ell, p in enumerate(self.state.periods):
            out[f"k_{ell}"] = float(p.k)
            out[f"alpha_{ell}"] = p.params.alpha
            out[f"beta_{ell}"] = p.params.beta
            if p.params.uses_similarity:
                out[f"tau_{ell}"] = p.params.tau
            out[f"eta_theta_{ell}"] = p.theta_spec.eta
            out[f"phi_theta_{ell}"] = p.theta_spec.phi
            for g in self.config.record_grid_points:
                out[f"m_theta_{ell}_x{g}"] = float(p.m_theta[g])
        out["eta_y"] = self.state.y_spec.eta
        out["phi_y"] = self.state.y_spec.phi
        return out


def metropolis_step(
    current: float,
    sd: float,
    log_target: Callable[[float], float],
    rng: np.random.Generator,
) -> tuple[bool, float]:
    """Symmetric Gaussian random-walk step; a proposal with zero target density is always rejected."""
    proposal = current + sd * rng.standard_normal()
    log_u = math.log(rng.random())
    new = log_target(proposal)
    if not math.isfinite(new):
        return False, current
    old = log_target(current)
    if log_u < new - old:
        return True, proposal
    return False, current
