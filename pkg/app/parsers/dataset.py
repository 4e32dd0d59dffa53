"""Assemble a FunctionalDataset from a data directory."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from app.errors import DataValidationError
from app.models import DayTag, FunctionalDataset
from app.parsers.adjacency import read_adjacency
from app.parsers.calendar import calendar_design, read_calendar
from app.parsers.observations import read_observations

logger = logging.getLogger(__name__)

OBSERVATIONS_FILE = "observations.csv"
ADJACENCY_FILE = "adjacency.csv"
CALENDAR_FILE = "calendar.csv"


def load_dataset(data_dir: str | Path) -> FunctionalDataset:
    """Read observations.csv, adjacency.csv and (optionally) calendar.csv.

    Without a calendar every day is a weekday and the model has one period.
    """
    data_dir = Path(data_dir)
    obs_path = data_dir / OBSERVATIONS_FILE
    if not obs_path.is_file():
        raise DataValidationError(f"{obs_path}: file not found")
    table = read_observations(obs_path)
    adj_path = data_dir / ADJACENCY_FILE
    if not adj_path.is_file():
        raise DataValidationError(f"{adj_path}: file not found")
    adjacency = read_adjacency(adj_path, table.n)

    cal_path = data_dir / CALENDAR_FILE
    if cal_path.is_file():
        tags = read_calendar(cal_path, table.T)
        w, names = calendar_design(tags)
    else:
        tags = tuple(DayTag.WEEKDAY for _ in range(table.T))
        w = np.ones((table.T, 1), dtype=np.int64)
        names = ("weekday",)
    return FunctionalDataset(
        y=table.y, grid=table.grid, w=w, adjacency=adjacency, day_tags=tags, period_names=names
    )
