"""Chain driver: burn-in, thinning, draw recording and per-chain summaries."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from app.config import settings
from app.errors import ConfigError, NumericError
from app.models import FunctionalDataset, Partition
from app.sampler.chain_config import ChainConfig, HyperPriors
from app.sampler.diagnostics import cluster_count_distribution, effective_sample_size, point_partition
from app.sampler.state import McmcState
from app.sampler.updates import GibbsSampler
from app.spatiotemporal import standardize_dataset

logger = logging.getLogger(__name__)

# Shortest trace for which an ESS is reported
MIN_ESS_DRAWS = 10


def sweep_rng(seed: int, chain: int, sweep: int) -> np.random.Generator:
    """Counter-based substream for one (chain, sweep) pair.

    Sweep index 0 is the first sweep; streams do not depend on thread scheduling.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chain, sweep))))


@dataclass
class ChainSummary:
    """Thinned post-burn-in output of one chain."""

    config: ChainConfig
    chain: int
    traces: dict[str, np.ndarray]
    partitions: list[np.ndarray]
    period_curves: np.ndarray
    mu_mean: np.ndarray
    acceptance: dict[str, float]
    final_state: McmcState
    elapsed: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return int(self.partitions[0].shape[0]) if self.partitions else 0

    @property
    def M(self) -> int:
        return len(self.partitions)

    def ess(self) -> dict[str, float]:
        """ESS of every scalar trace long enough to estimate one."""
        return {
            name: effective_sample_size(values)
            for name, values in self.traces.items()
            if values.size >= MIN_ESS_DRAWS
        }

    def point_partition(self, ell: int) -> Optional[Partition]:
        if self.n_draws == 0:
            return None
        return point_partition(self.partitions[ell])

    def k_distribution(self, ell: int) -> dict[int, float]:
        return cluster_count_distribution(self.partitions[ell])

    def percentiles(self, name: str, q: tuple[float, ...] = (2.5, 50.0, 97.5)) -> dict[str, float]:
        values = self.traces.get(name)
        if values is None or values.size == 0:
            return {}
        return {f"{p:g}%": float(v) for p, v in zip(q, np.percentile(values, q))}

    def posterior_means(self) -> dict[str, float]:
        return {name: float(v.mean()) for name, v in self.traces.items() if v.size}

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready summary of the chain."""
        periods = []
        for ell in range(self.M):
            point = self.point_partition(ell)
            periods.append(
                {
                    "period": ell,
                    "percentiles": {
                        p: self.percentiles(f"{p}_{ell}")
                        for p in ("alpha", "beta", "tau")
                        if f"{p}_{ell}" in self.traces
                    },
                    "k_distribution": {str(k): v for k, v in self.k_distribution(ell).items()},
                    "point_partition": point.assignments.tolist() if point is not None else None,
                }
            )
        return {
            "chain": self.chain,
            "draws": self.n_draws,
            "metadata": self.metadata,
            "posterior_means": self.posterior_means(),
            "periods": periods,
            "ess": self.ess(),
            "acceptance": self.acceptance,
            "elapsed_seconds": self.elapsed,
        }


class _DrawRecorder:
    def __init__(self, data: FunctionalDataset, capacity: int):
        self.data = data
        self.capacity = capacity
        self.rows: list[dict[str, float]] = []
        self.labels = [np.zeros((capacity, data.n), dtype=np.int64) for _ in range(data.M)]
        self.curve_sum = np.zeros((data.M, data.n, data.d))
        self.count = 0

    def record(self, sampler: GibbsSampler) -> None:
        state = sampler.state
        for ell, p in enumerate(state.periods):
            self.labels[ell][self.count] = p.labels
        self.curve_sum += state.period_curves()
        self.rows.append(sampler.scalars())
        self.count += 1

    def traces(self) -> dict[str, np.ndarray]:
        if not self.rows:
            return {}
        return {name: np.array([row[name] for row in self.rows]) for name in self.rows[0]}

    def period_curves(self) -> np.ndarray:
        if self.count == 0:
            return np.full_like(self.curve_sum, np.nan)
        return self.curve_sum / self.count


def _validate(data: FunctionalDataset, config: ChainConfig) -> None:
    bad = [g for g in config.record_grid_points if not 0 <= g < data.d]
    if bad:
        raise ConfigError(f"record_grid_points {bad} outside 0..{data.d - 1}")


def run_chain(
    data: FunctionalDataset,
    config: ChainConfig,
    priors: Optional[HyperPriors] = None,
    chain: int = 0,
) -> ChainSummary:
    """Run burn_in + samples sweeps and keep every ``thin``-th post-burn-in draw.

    Args:
        data: Observations; standardized first when ``config.standardize`` is set.
        config: Run lengths, seed, model variant and priors.
        priors: Overrides ``config.priors`` when given.
        chain: Chain index selecting the random substreams.

    Raises:
        NumericError: tagged with the sweep where a factorization or draw failed.
    """
    if priors is not None:
        config = config.model_copy(update={"priors": priors})
    _validate(data, config)
    if config.standardize and not data.standardized:
        data = standardize_dataset(data)

    sampler = GibbsSampler(data, config)
    recorder = _DrawRecorder(data, config.recorded_draws)
    progress_every = settings.progress_every
    started = time.perf_counter()

    logger.info(
        "chain %d: model=%s, %d burn-in + %d sweeps (thin %d), seed %d",
        chain, config.model.value, config.burn_in, config.samples, config.thin, config.seed,
    )
    for sweep in range(config.total_sweeps):
        rng = sweep_rng(config.seed, chain, sweep)
        try:
            sampler.sweep(rng)
        except NumericError as e:
            logger.error("chain %d aborted at sweep %d: %s", chain, sweep, e)
            raise e.at_sweep(sweep) from e
        kept = sweep - config.burn_in + 1
        if kept > 0 and kept % config.thin == 0 and recorder.count < recorder.capacity:
            recorder.record(sampler)
        if progress_every and (sweep + 1) % progress_every == 0:
            ks = [p.k for p in sampler.state.periods]
            logger.info("chain %d: sweep %d/%d, K=%s", chain, sweep + 1, config.total_sweeps, ks)

    elapsed = time.perf_counter() - started
    period_curves = recorder.period_curves()
    mu_mean = np.einsum("tl,lid->itd", data.w.astype(float), period_curves)
    summary = ChainSummary(
        config=config,
        chain=chain,
        traces=recorder.traces(),
        partitions=[labels[: recorder.count] for labels in recorder.labels],
        period_curves=period_curves,
        mu_mean=mu_mean,
        acceptance=sampler.acceptance_rates(),
        final_state=sampler.state,
        elapsed=elapsed,
        metadata={
            "model": config.model.value,
            "conditional_mode": config.conditional_mode.value,
            "approximate_conditionals": sampler.approximate,
            "burn_in": config.burn_in,
            "samples": config.samples,
            "thin": config.thin,
            "seed": config.seed,
            "chain": chain,
            "default_burn_in": ChainConfig.model_fields["burn_in"].default,
            "default_samples": ChainConfig.model_fields["samples"].default,
            "standardized": data.standardized,
            "use_likelihood": config.use_likelihood,
        },
    )
    logger.info("chain %d finished in %.1fs with %d draws", chain, elapsed, summary.n_draws)
    return summary


def run_chains(
    data: FunctionalDataset,
    config: ChainConfig,
    chains: int = 1,
    threads: int = 1,
) -> list[ChainSummary]:
    """Run independent chains, concurrently when ``threads`` > 1; results are ordered by chain."""
    if chains < 1 or threads < 1:
        raise ConfigError(f"chains and threads must be positive, got {chains} and {threads}")
    if threads == 1 or chains == 1:
        return [run_chain(data, config, chain=c) for c in range(chains)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_chain, data, config, None, c) for c in range(chains)]
        return [f.result() for f in futures]
