"""Simulation study over a grid of model variants, prior presets and noise levels.

Every replicate dataset is drawn once per noise level and shared by all
(model, preset) cells, so the cells are compared on the same data. A model
variant listed in MODEL_PRESETS always runs with its own preset.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.errors import ConfigError, NumericError
from app.metrics import evaluate
from app.models import ModelVariant
from app.sampler import ChainConfig, MODEL_PRESETS, PRIOR_PRESETS, run_chain
from app.sampler.chain_config import load_json_model
from app.simdata import HIGH_SNR_NOISE_ETA, LOW_SNR_NOISE_ETA, SimConfig, SimulatedData, generate

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("ari", "purity", "rmse", "k")
CELL_COLUMNS = ("model", "preset", "noise_eta", "snr", "noise_level")


class ExperimentConfig(BaseModel):
    """Grid axes, replicate count and the chain lengths shared by every cell."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    models: list[ModelVariant] = Field(
        default_factory=lambda: [ModelVariant.SGDP, ModelVariant.GDP, ModelVariant.SDP], min_length=1
    )
    presets: list[str] = Field(default_factory=lambda: ["prior1", "prior2"], min_length=1)
    noise_etas: list[float] = Field(
        default_factory=lambda: [HIGH_SNR_NOISE_ETA, LOW_SNR_NOISE_ETA], min_length=1
    )
    replicates: int = Field(10, ge=1)
    burn_in: int = Field(2000, ge=0)
    samples: int = Field(1000, ge=1)
    thin: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    sim: SimConfig = SimConfig()

    @field_validator("presets")
    @classmethod
    def _known_presets(cls, presets: list[str]) -> list[str]:
        unknown = sorted(set(presets) - set(PRIOR_PRESETS))
        if unknown:
            raise ValueError(f"unknown prior presets {unknown}; choose from {sorted(PRIOR_PRESETS)}")
        return presets

    @field_validator("noise_etas")
    @classmethod
    def _non_negative_noise(cls, etas: list[float]) -> list[float]:
        if any(not eta >= 0 for eta in etas):
            raise ValueError(f"noise scales must be non-negative, got {etas}")
        return etas

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        return load_json_model(cls, path)

    def cells(self) -> list[tuple[ModelVariant, str]]:
        """(model, preset) pairs in grid order, without duplicates."""
        out: list[tuple[ModelVariant, str]] = []
        for model in self.models:
            presets = [MODEL_PRESETS[model]] if model in MODEL_PRESETS else self.presets
            out.extend((model, preset) for preset in presets if (model, preset) not in out)
        return out

    def chain_config(self, model: ModelVariant, preset: str, seed: int) -> ChainConfig:
        return ChainConfig(
            burn_in=self.burn_in,
            samples=self.samples,
            thin=self.thin,
            seed=seed,
            model=model,
            prior_preset=preset,
        )


def derived_seed(seed: int, *key: int) -> int:
    """Non-negative 63-bit seed of the substream ``key`` of ``seed``; fits an int64 column."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0]) >> 1


@dataclass(frozen=True)
class _Task:
    noise_index: int
    replicate: int
    cell_index: int
    model: ModelVariant
    preset: str


@dataclass
class ExperimentResults:
    """One row per (cell, noise level, replicate) plus the config that produced them."""

    config: ExperimentConfig
    rows: list[dict[str, Any]]

    def frame(self) -> pd.DataFrame:
        columns = [*CELL_COLUMNS, "replicate", "sim_seed", "chain_seed", *METRIC_COLUMNS, "elapsed_seconds", "error"]
        return pd.DataFrame(self.rows, columns=columns)

    def summary(self) -> pd.DataFrame:
        """Mean and standard deviation of each metric per cell; failed replicates are left out."""
        grouped = self.frame().groupby(list(CELL_COLUMNS), sort=False)
        table = grouped[list(METRIC_COLUMNS)].agg(["mean", "std"])
        table.columns = [f"{metric}_{stat}" for metric, stat in table.columns]
        table.insert(0, "replicates", grouped["ari"].count())
        table.insert(1, "failed", grouped["error"].count())
        return table.reset_index()


class ExperimentRunner:
    """Simulates the replicate datasets and fits every grid cell on them."""

    def __init__(self, config: ExperimentConfig, threads: int = 1):
        if threads < 1:
            raise ConfigError(f"threads must be positive, got {threads}")
        self.config = config
        self.threads = threads
        self._datasets: dict[tuple[int, int], SimulatedData] = {}

    def dataset(self, noise_index: int, replicate: int) -> SimulatedData:
        key = (noise_index, replicate)
        if key not in self._datasets:
            sim = SimConfig.model_validate(
                {
                    **self.config.sim.model_dump(),
                    "noise_eta": self.config.noise_etas[noise_index],
                    "seed": derived_seed(self.config.seed, 0, noise_index, replicate),
                }
            )
            self._datasets[key] = generate(sim)
        return self._datasets[key]

    def tasks(self) -> list[_Task]:
        return [
            _Task(noise_index, replicate, cell_index, model, preset)
            for noise_index in range(len(self.config.noise_etas))
            for replicate in range(self.config.replicates)
            for cell_index, (model, preset) in enumerate(self.config.cells())
        ]

    def run(self) -> ExperimentResults:
        tasks = self.tasks()
        logger.info(
            "experiment: %d cells x %d noise levels x %d replicates",
            len(self.config.cells()), len(self.config.noise_etas), self.config.replicates,
        )
        # datasets are simulated up front so worker threads only read them
        for noise_index in range(len(self.config.noise_etas)):
            for replicate in range(self.config.replicates):
                self.dataset(noise_index, replicate)
        if self.threads == 1:
            rows = [self.run_task(t) for t in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                rows = list(pool.map(self.run_task, tasks))
        return ExperimentResults(self.config, rows)

    def run_task(self, task: _Task) -> dict[str, Any]:
        sim = self.dataset(task.noise_index, task.replicate)
        chain_seed = derived_seed(self.config.seed, 1, task.noise_index, task.replicate, task.cell_index)
        row: dict[str, Any] = {
            "model": task.model.value,
            "preset": task.preset,
            "noise_eta": sim.config.noise_eta,
            **sim.config.snr_labels(),
            "replicate": task.replicate,
            "sim_seed": sim.config.seed,
            "chain_seed": chain_seed,
            "error": None,
        }
        started = time.perf_counter()
        try:
            summary = run_chain(sim.dataset, self.config.chain_config(task.model, task.preset, chain_seed))
        except NumericError as e:
            logger.warning(
                "%s/%s noise %.3g replicate %d failed: %s",
                task.model.value, task.preset, sim.config.noise_eta, task.replicate, e,
            )
            row.update({name: np.nan for name in METRIC_COLUMNS}, error=str(e))
        else:
            estimate = summary.point_partition(0)
            row.update(evaluate(sim.truth, estimate, summary.mu_mean.mean(axis=1), sim.true_means))
            row["k"] = estimate.k
            logger.info(
                "%s/%s noise %.3g replicate %d: ARI %.3f, RMSE %.3f",
                task.model.value, task.preset, sim.config.noise_eta, task.replicate, row["ari"], row["rmse"],
            )
        row["elapsed_seconds"] = time.perf_counter() - started
        return row


def run_experiment(config: ExperimentConfig, threads: int = 1, seed: Optional[int] = None) -> ExperimentResults:
    """Run the whole grid; ``seed`` overrides ``config.seed``."""
    if seed is not None:
        config = ExperimentConfig.model_validate({**config.model_dump(), "seed": seed})
    return ExperimentRunner(config, threads).run()
