"""Joint-distribution test of the sampler.

Marginal-conditional draws come straight from the prior and the likelihood.
Successive-conditional draws alternate one sampler sweep with a fresh data
draw given the current parameters. Both target the same joint distribution,
so the means of any test function agree when the sampler is correct.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from app.gp import GpSpec, sample_gp
from app.models import FunctionalDataset, ModelVariant, SgdpParams
from app.partition import sample_prior_partition
from app.sampler.chain_config import ChainConfig
from app.sampler.diagnostics import effective_sample_size
from app.sampler.state import McmcState, PeriodState
from app.sampler.updates import GibbsSampler

logger = logging.getLogger(__name__)


def _rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, index))))


def draw_prior_state(data: FunctionalDataset, config: ChainConfig, rng: np.random.Generator) -> McmcState:
    """Every latent variable drawn from its prior."""
    pr = config.priors
    adj = data.adjacency if config.model.uses_similarity else None
    m_m = np.full(data.d, pr.m_m)
    c_m = pr.c_m * np.eye(data.d)
    periods = []
    for _ in range(data.M):
        alpha = pr.sample_alpha(rng)
        if config.model is ModelVariant.SDP:
            params = SgdpParams.dirichlet(alpha, pr.sample_tau(rng))
        elif config.model is ModelVariant.GDP:
            params = SgdpParams.gdp(alpha, pr.sample_beta(rng))
        else:
            params = SgdpParams(alpha=alpha, beta=pr.sample_beta(rng), tau=pr.sample_tau(rng))
        labels = sample_prior_partition(data.n, adj, params, rng).assignments.copy()
        theta_spec = GpSpec(data.grid, math.sqrt(pr.sample_eta_sq(rng)), pr.sample_phi(rng))
        m_theta = sample_gp(m_m, c_m, rng)
        atoms = sample_gp(m_theta, theta_spec.factor, rng, size=int(labels.max()) + 1)
        periods.append(PeriodState(labels, atoms, m_theta, params, theta_spec))
    y_spec = GpSpec(data.grid, math.sqrt(pr.sample_eta_sq(rng)), pr.sample_phi(rng))
    return McmcState(periods=periods, y_spec=y_spec)


def simulate_observations(state: McmcState, w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """y = mu + independent GP(0, C_y) noise per (area, day)."""
    mu = state.mean_surface(w)
    n, T, d = mu.shape
    noise = sample_gp(np.zeros(d), state.y_spec.factor, rng, size=n * T)
    return mu + noise.reshape(n, T, d)


def joint_statistics(state: McmcState) -> dict[str, float]:
    """Scalars compared between the two simulators (first period and the noise scale)."""
    p = state.periods[0]
    out = {"alpha": p.params.alpha, "beta": p.params.beta, "k": float(p.k)}
    if p.params.uses_similarity:
        out["tau"] = p.params.tau
    out["eta_y_sq"] = state.y_spec.eta ** 2
    out["theta_x0"] = float(p.atoms[p.labels[0], 0])
    out["m_theta_x0"] = float(p.m_theta[0])
    return out


@dataclass
class GewekeResult:
    marginal: dict[str, np.ndarray]
    successive: dict[str, np.ndarray]

    def z_scores(self) -> dict[str, float]:
        """Difference of means over its standard error; successive draws are ESS-deflated."""
        out = {}
        for name, m in self.marginal.items():
            s = self.successive[name]
            var = m.var(ddof=1) / m.size + s.var(ddof=1) / effective_sample_size(s)
            out[name] = float((m.mean() - s.mean()) / math.sqrt(var)) if var > 0 else 0.0
        return out


def _stack(rows: list[dict[str, float]]) -> dict[str, np.ndarray]:
    return {name: np.array([row[name] for row in rows]) for name in rows[0]}


def run_geweke(
    template: FunctionalDataset,
    config: ChainConfig,
    draws: int,
    seed: int = 0,
) -> GewekeResult:
    """Run both simulators for ``draws`` iterations on the shape of ``template``.

    Only the grid, design, adjacency and dimensions of ``template`` are used.
    """
    config = config.model_copy(update={"use_likelihood": True})
    marginal = []
    for r in range(draws):
        rng = _rng(seed, 0, r)
        state = draw_prior_state(template, config, rng)
        marginal.append(joint_statistics(state))

    rng = _rng(seed, 1, 0)
    state = draw_prior_state(template, config, rng)
    data = template.with_y(simulate_observations(state, template.w, rng))
    sampler = GibbsSampler(data, config, state)
    successive = []
    for r in range(draws):
        rng = _rng(seed, 2, r)
        sampler.sweep(rng)
        y = simulate_observations(sampler.state, template.w, rng)
        sampler.data = sampler.data.with_y(y)
        successive.append(joint_statistics(sampler.state))
        if (r + 1) % 1000 == 0:
            logger.info("geweke: %d/%d successive-conditional draws", r + 1, draws)
    return GewekeResult(marginal=_stack(marginal), successive=_stack(successive))
