"""Read long-format observation CSVs into an n x T x |X| array."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from app.errors import DataValidationError

logger = logging.getLogger(__name__)

OBSERVATION_COLUMNS = ["area_id", "day_index", "hour_index", "value"]


@dataclass(frozen=True, eq=False)
class ObservationTable:
    """Dense observations plus the grid read from ``hour_index``."""

    y: np.ndarray
    grid: np.ndarray

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def T(self) -> int:
        return int(self.y.shape[1])


def _require_columns(frame: pd.DataFrame, columns: list[str], path: Path) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{path}: missing columns {missing}")


def observations_from_frame(frame: pd.DataFrame, source: str = "<frame>") -> ObservationTable:
    """Pivot (area_id, day_index, hour_index, value) rows into a dense cube.

    Area and day ids must be 0..n-1 and 0..T-1; hour_index values become the
    grid. Every (area, day, hour) cell must appear exactly once.
    """
    path = Path(source)
    _require_columns(frame, OBSERVATION_COLUMNS, path)
    if frame.empty:
        raise DataValidationError(f"{path}: no observations")
    if frame[OBSERVATION_COLUMNS].isna().any().any():
        raise DataValidationError(f"{path}: missing values")

    areas = frame["area_id"].astype(np.int64)
    days = frame["day_index"].astype(np.int64)
    n, T = int(areas.max()) + 1, int(days.max()) + 1
    if areas.min() < 0 or days.min() < 0:
        raise DataValidationError(f"{path}: area and day ids must be nonnegative")
    grid = np.sort(frame["hour_index"].astype(float).unique())
    d = grid.size

    if frame.duplicated(subset=["area_id", "day_index", "hour_index"]).any():
        raise DataValidationError(f"{path}: duplicate (area_id, day_index, hour_index) rows")
    if len(frame) != n * T * d:
        raise DataValidationError(
            f"{path}: expected {n * T * d} rows for {n} areas x {T} days x {d} hours, "
            f"found {len(frame)} (gaps are not allowed)"
        )

    hours = np.searchsorted(grid, frame["hour_index"].astype(float).to_numpy())
    y = np.empty((n, T, d))
    y[areas.to_numpy(), days.to_numpy(), hours] = frame["value"].astype(float).to_numpy()
    if not np.all(np.isfinite(y)):
        raise DataValidationError(f"{path}: non-finite values")
    logger.info("read %d areas x %d days x %d hours from %s", n, T, d, path)
    return ObservationTable(y=y, grid=grid)


def read_observations(path: str | Path) -> ObservationTable:
    path = Path(path)
    return observations_from_frame(pd.read_csv(path), str(path))


def observations_to_frame(y: np.ndarray, grid: np.ndarray) -> pd.DataFrame:
    """Long-format frame of a dense cube, ordered by area, day, hour."""
    y = np.asarray(y, dtype=float)
    n, T, d = y.shape
    idx = pd.MultiIndex.from_product([range(n), range(T), range(d)], names=["area_id", "day_index", "h"])
    frame = idx.to_frame(index=False)
    frame["hour_index"] = np.asarray(grid, dtype=float)[frame.pop("h").to_numpy()]
    frame["value"] = y.reshape(-1)
    return frame[OBSERVATION_COLUMNS]
