"""Synthetic clustered functional data on adjacent area groups.

Each group of ``group_size`` mutually adjacent areas shares one mean curve
drawn from GP(0, mean_eta, mean_phi); every (area, day) curve adds its own
GP(0, noise_eta, noise_phi) noise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.gp import GpSpec, sample_gp
from app.models import AdjacencyStructure, DayTag, FunctionalDataset, Partition

logger = logging.getLogger(__name__)

HIGH_SNR_NOISE_ETA = 2.0 / 3.0
LOW_SNR_NOISE_ETA = 1.0


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_groups: int = Field(8, ge=1)
    group_size: int = Field(5, ge=1)
    n_areas: Optional[int] = Field(None, ge=1)
    n_days: int = Field(15, ge=1)
    grid_len: int = Field(24, ge=2)
    mean_eta: float = Field(2.0, gt=0)
    mean_phi: float = Field(5.0, gt=0)
    noise_eta: float = Field(HIGH_SNR_NOISE_ETA, ge=0)
    noise_phi: float = Field(1.0, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_areas(self) -> SimConfig:
        total = self.n_groups * self.group_size
        if self.n_areas is not None and self.n_areas != total:
            raise ValueError(f"n_areas={self.n_areas} but n_groups x group_size = {total}")
        return self

    @property
    def areas(self) -> int:
        return self.n_groups * self.group_size

    @property
    def grid(self) -> np.ndarray:
        """Abstract hourly grid 1..grid_len."""
        return np.arange(1, self.grid_len + 1, dtype=float)

    def snr_labels(self) -> dict[str, str]:
        """Both naming conventions for the noise level.

        The prose convention calls the smaller noise scale high-SNR; the
        results table files the same runs under a "low" noise row.
        """
        small = self.noise_eta <= HIGH_SNR_NOISE_ETA + 1e-12
        return {
            "snr": "high" if small else "low",
            "noise_level": "low" if small else "high",
        }


@dataclass(frozen=True, eq=False)
class SimulatedData:
    dataset: FunctionalDataset
    truth: Partition
    true_means: np.ndarray
    config: SimConfig

    @property
    def day_tags(self) -> tuple[DayTag, ...]:
        return tuple(DayTag.WEEKDAY for _ in range(self.dataset.T))


def generate(config: SimConfig) -> SimulatedData:
    """Draw group means and noisy per-day curves; one period covers every day.

    Returns:
        The dataset, the true group partition and the n x grid_len true means.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
    grid = config.grid
    d = grid.size
    mean_spec = GpSpec(grid, config.mean_eta, config.mean_phi)
    group_means = sample_gp(np.zeros(d), mean_spec.factor, rng, size=config.n_groups)

    labels = np.repeat(np.arange(config.n_groups), config.group_size)
    true_means = group_means[labels]
    n, T = config.areas, config.n_days
    if config.noise_eta > 0:
        noise_spec = GpSpec(grid, config.noise_eta, config.noise_phi)
        noise = sample_gp(np.zeros(d), noise_spec.factor, rng, size=n * T).reshape(n, T, d)
    else:
        noise = np.zeros((n, T, d))
    y = true_means[:, None, :] + noise

    dataset = FunctionalDataset(
        y=y,
        grid=grid,
        w=np.ones((T, 1), dtype=np.int64),
        adjacency=AdjacencyStructure.block_diagonal([config.group_size] * config.n_groups),
        day_tags=tuple(DayTag.WEEKDAY for _ in range(T)),
        period_names=("weekday",),
    )
    logger.info(
        "simulated %d areas in %d groups, %d days x %d points, noise eta %.3g",
        n, config.n_groups, T, d, config.noise_eta,
    )
    return SimulatedData(dataset=dataset, truth=Partition(labels), true_means=true_means, config=config)
