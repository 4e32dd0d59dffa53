"""Read day-tag calendars and turn them into period designs."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from app.errors import DataValidationError
from app.models import DayTag
from app.spatiotemporal import PERIOD_NAMES, build_period_design

logger = logging.getLogger(__name__)

CALENDAR_COLUMNS = ["day_index", "tag"]


def read_calendar(path: str | Path, n_days: int) -> tuple[DayTag, ...]:
    """Tags for days 0..n_days-1; each day must appear once."""
    path = Path(path)
    frame = pd.read_csv(path, dtype={"tag": str})
    missing = [c for c in CALENDAR_COLUMNS if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{path}: missing columns {missing}")
    if frame["day_index"].duplicated().any():
        raise DataValidationError(f"{path}: duplicate day_index rows")
    days = frame["day_index"].astype(np.int64).to_numpy()
    if sorted(days.tolist()) != list(range(n_days)):
        raise DataValidationError(f"{path}: calendar must tag days 0..{n_days - 1} exactly once")
    tags = []
    for day, tag in sorted(zip(days.tolist(), frame["tag"].str.strip().tolist())):
        try:
            tags.append(DayTag(tag))
        except ValueError as e:
            raise DataValidationError(f"{path}: day {day} has unknown tag {tag!r}") from e
    return tuple(tags)


def calendar_design(tags: tuple[DayTag, ...]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Design restricted to periods that own at least one day.

    Returns:
        (T x M matrix, names of the kept weekday/holiday/pre-holiday columns)
    """
    full = build_period_design(tags)
    kept = [col for col in range(full.shape[1]) if full[:, col].any()]
    names = tuple(PERIOD_NAMES[col] for col in kept)
    if len(kept) < full.shape[1]:
        logger.info("calendar uses periods %s of %d", list(names), full.shape[1])
    return full[:, kept], names


def calendar_to_frame(tags: tuple[DayTag, ...]) -> pd.DataFrame:
    return pd.DataFrame({"day_index": range(len(tags)), "tag": [DayTag(t).value for t in tags]})
