"""Gibbs / Metropolis-Hastings posterior sampler for the per-period GP mixture."""

from app.sampler.chain_config import ChainConfig, HyperPriors, InitialValues, ProposalScales
from app.sampler.presets import DEFAULT_PRESET, MODEL_PRESETS, PRIOR_PRESETS
from app.sampler.state import McmcState, PeriodState, initial_state
from app.sampler.updates import GibbsSampler, metropolis_step
from app.sampler.diagnostics import (
    binder_loss,
    cluster_count_distribution,
    effective_sample_size,
    point_partition,
    posterior_similarity,
)
from app.sampler.chain import ChainSummary, run_chain, run_chains, sweep_rng

__all__ = [
    "ChainConfig",
    "ChainSummary",
    "DEFAULT_PRESET",
    "GibbsSampler",
    "HyperPriors",
    "InitialValues",
    "MODEL_PRESETS",
    "McmcState",
    "PRIOR_PRESETS",
    "PeriodState",
    "ProposalScales",
    "binder_loss",
    "cluster_count_distribution",
    "effective_sample_size",
    "initial_state",
    "metropolis_step",
    "point_partition",
    "posterior_similarity",
    "run_chain",
    "run_chains",
    "sweep_rng",
]
