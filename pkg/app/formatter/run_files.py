"""Write and read the CSV / JSON artifacts of simulate and fit runs.

Layout of a fit directory:

    manifest.json          run manifest (written last, atomically)
    chain_00/draws.csv     thinned scalar traces, one row per draw
    chain_00/partitions.csv  labels per (draw, period), one column per area
    chain_00/summary.json  percentiles, K distributions, point partitions, ESS
    chain_00/means.csv     posterior-mean period curves per area
    chain_00/area_means.csv  posterior mean of mu_i(x), averaged over days

An experiment directory holds results.csv (one row per cell and replicate),
summary.csv (metric means and standard deviations per cell) and
experiment_config.json.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TYPE_CHECKING

import numpy as np
import pandas as pd

from app.config import settings
from app.errors import DataValidationError
from app.models import FunctionalDataset
from app.parsers import adjacency_to_frame, calendar_to_frame, observations_to_frame
from app.simdata import SimulatedData

if TYPE_CHECKING:
    from app.experiment import ExperimentResults

logger = logging.getLogger(__name__)

DRAWS_FILE = "draws.csv"
PARTITIONS_FILE = "partitions.csv"
SUMMARY_FILE = "summary.json"
MEANS_FILE = "means.csv"
AREA_MEANS_FILE = "area_means.csv"
TRUTH_FILE = "truth.json"
TRUE_MEANS_FILE = "true_means.csv"
SIM_CONFIG_FILE = "sim_config.json"
RESULTS_FILE = "results.csv"
CELL_SUMMARY_FILE = "summary.csv"
EXPERIMENT_CONFIG_FILE = "experiment_config.json"


def chain_dir_name(chain: int) -> str:
    return f"chain_{chain:02d}"


def write_json_atomic(path: str | Path, payload: Any) -> Path:
    """Write JSON through a temp file in the same directory, then replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DataValidationError(f"{path}: file not found") from e
    except json.JSONDecodeError as e:
        raise DataValidationError(f"{path}: invalid JSON ({e})") from e


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=settings.csv_float_format, lineterminator="\n")
    return path


def curves_to_frame(curves: np.ndarray, grid: np.ndarray) -> pd.DataFrame:
    """(area_id, hour_index, value) rows for an n x |X| array."""
    curves = np.asarray(curves, dtype=float)
    n, d = curves.shape
    return pd.DataFrame(
        {
            "area_id": np.repeat(np.arange(n), d),
            "hour_index": np.tile(np.asarray(grid, dtype=float), n),
            "value": curves.reshape(-1),
        }
    )


def curves_from_frame(frame: pd.DataFrame, source: str, allow_missing: bool = False) -> np.ndarray:
    missing = [c for c in ("area_id", "hour_index", "value") if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{source}: missing columns {missing}")
    table = frame.pivot(index="area_id", columns="hour_index", values="value").sort_index()
    if not allow_missing and table.isna().any().any():
        raise DataValidationError(f"{source}: incomplete area x hour table")
    return table.to_numpy(dtype=float)


class SimulationWriter:
    """Writes a simulated dataset in the ingestion formats plus its ground truth."""

    def __init__(self, sim: SimulatedData):
        self.sim = sim

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        data = self.sim.dataset
        _write_csv(observations_to_frame(data.y, data.grid), out_dir / "observations.csv")
        _write_csv(adjacency_to_frame(data.adjacency), out_dir / "adjacency.csv")
        _write_csv(calendar_to_frame(self.sim.day_tags), out_dir / "calendar.csv")
        _write_csv(curves_to_frame(self.sim.true_means, data.grid), out_dir / TRUE_MEANS_FILE)
        write_json_atomic(
            out_dir / TRUTH_FILE,
            {
                "labels": self.sim.truth.assignments.tolist(),
                "n_clusters": self.sim.truth.k,
                "noise_eta": self.sim.config.noise_eta,
                **self.sim.config.snr_labels(),
            },
        )
        write_json_atomic(out_dir / SIM_CONFIG_FILE, self.sim.config.model_dump(mode="json"))
        logger.info("wrote simulated dataset to %s", out_dir)
        return out_dir


class FitWriter:
    """Writes one chain's draws and summaries into its own directory."""

    def __init__(self, summary, data: FunctionalDataset):
        self.summary = summary
        self.data = data

    def write(self, out_dir: str | Path) -> Path:
        chain_dir = Path(out_dir) / chain_dir_name(self.summary.chain)
        chain_dir.mkdir(parents=True, exist_ok=True)
        s = self.summary
        draws = pd.DataFrame(s.traces)
        draws.insert(0, "draw", np.arange(s.n_draws))
        _write_csv(draws, chain_dir / DRAWS_FILE)
        _write_csv(self._partitions_frame(), chain_dir / PARTITIONS_FILE)
        _write_csv(self._means_frame(), chain_dir / MEANS_FILE)
        _write_csv(curves_to_frame(s.mu_mean.mean(axis=1), self.data.grid), chain_dir / AREA_MEANS_FILE)
        write_json_atomic(chain_dir / SUMMARY_FILE, s.to_dict())
        logger.info("chain %d: wrote %d draws to %s", s.chain, s.n_draws, chain_dir)
        return chain_dir

    def _partitions_frame(self) -> pd.DataFrame:
        s = self.summary
        rows = []
        for ell, labels in enumerate(s.partitions):
            frame = pd.DataFrame(labels, columns=[f"area_{i}" for i in range(self.data.n)])
            frame.insert(0, "period_name", self.data.period_name(ell))
            frame.insert(0, "period", ell)
            frame.insert(0, "draw", np.arange(labels.shape[0]))
            rows.append(frame)
        return pd.concat(rows, ignore_index=True).sort_values(["draw", "period"], kind="stable")

    def _means_frame(self) -> pd.DataFrame:
        frames = []
        for ell in range(self.summary.M):
            frame = curves_to_frame(self.summary.period_curves[ell], self.data.grid)
            frame.insert(1, "period", ell)
            frame.insert(2, "period_name", self.data.period_name(ell))
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


class ExperimentWriter:
    """Writes the per-replicate results table, the per-cell summary and the grid config."""

    def __init__(self, results: ExperimentResults):
        self.results = results

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        frame = self.results.frame()
        _write_csv(frame, out_dir / RESULTS_FILE)
        _write_csv(self.results.summary(), out_dir / CELL_SUMMARY_FILE)
        write_json_atomic(out_dir / EXPERIMENT_CONFIG_FILE, self.results.config.model_dump(mode="json"))
        logger.info("wrote %d experiment rows to %s", len(frame), out_dir)
        return out_dir


@dataclass
class ChainFiles:
    """Draws of one chain read back from disk."""

    chain: int
    traces: dict[str, np.ndarray]
    partitions: list[np.ndarray]
    area_means: np.ndarray
    period_names: list[str]


def read_chain_dir(chain_dir: str | Path) -> ChainFiles:
    chain_dir = Path(chain_dir)
    try:
        draws = pd.read_csv(chain_dir / DRAWS_FILE)
        parts = pd.read_csv(chain_dir / PARTITIONS_FILE)
        area_means = curves_from_frame(
            pd.read_csv(chain_dir / AREA_MEANS_FILE), str(chain_dir / AREA_MEANS_FILE), allow_missing=True
        )
    except FileNotFoundError as e:
        raise DataValidationError(f"{chain_dir}: incomplete fit output ({e.filename})") from e
    except pd.errors.EmptyDataError as e:
        raise DataValidationError(f"{chain_dir}: empty output file") from e
    traces = {c: draws[c].to_numpy(dtype=float) for c in draws.columns if c != "draw"}
    area_cols = [c for c in parts.columns if c.startswith("area_")]
    n_periods = int(parts["period"].max()) + 1 if len(parts) else 0
    partitions = [
        parts.loc[parts["period"] == ell].sort_values("draw")[area_cols].to_numpy(dtype=np.int64)
        for ell in range(n_periods)
    ]
    if "period_name" in parts.columns:
        names = [str(parts.loc[parts["period"] == ell, "period_name"].iloc[0]) for ell in range(n_periods)]
    else:
        names = [f"period_{ell}" for ell in range(n_periods)]
    return ChainFiles(
        chain=int(chain_dir.name.rsplit("_", 1)[-1]),
        traces=traces,
        partitions=partitions,
        area_means=area_means,
        period_names=names,
    )


def read_fit_dir(fit_dir: str | Path) -> list[ChainFiles]:
    fit_dir = Path(fit_dir)
    chain_dirs = sorted(p for p in fit_dir.glob("chain_*") if p.is_dir())
    if not chain_dirs:
        raise DataValidationError(f"{fit_dir}: no chain_XX directories")
    return [read_chain_dir(p) for p in chain_dirs]
