"""Per-period additive model: calendar design, standardization and residuals.

mu_it(x) = sum_l w_tl theta_{z_il, l}(x), with one SGDP partition per period.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Iterable, Union

import numpy as np

from app.errors import DataValidationError
from app.models import DayTag, FunctionalDataset

if TYPE_CHECKING:
    from app.sampler.state import McmcState

logger = logging.getLogger(__name__)


def standardize(raw: np.ndarray) -> np.ndarray:
    """Divide each grid point by the root mean square over all (area, day) pairs.

    After scaling, sum_{i,t} y_it(x)^2 = n T at every x.

    Raises:
        DataValidationError: the input has negative values or a grid point is zero everywhere.
    """
    y = np.asarray(raw, dtype=float)
    if y.ndim != 3:
        raise DataValidationError(f"raw data must be n x T x |X|, got shape {y.shape}")
    if np.any(y < 0):
        raise DataValidationError("raw counts must be nonnegative")
    scale = np.sqrt(np.mean(y * y, axis=(0, 1)))
    zero = np.flatnonzero(scale == 0)
    if zero.size:
        raise DataValidationError(f"grid points {zero.tolist()} are zero for every area and day")
    return y / scale[None, None, :]


def standardize_dataset(data: FunctionalDataset) -> FunctionalDataset:
    if data.standardized:
        return data
    logger.info("standardizing %d x %d x %d observations", data.n, data.T, data.d)
    return data.with_y(standardize(data.y), standardized=True)


# Names of the build_period_design columns
PERIOD_NAMES = ("weekday", "holiday", "pre_holiday")


def build_period_design(tags: Iterable[Union[DayTag, str]]) -> np.ndarray:
    """T x 3 indicator matrix for weekday / holiday / pre-holiday tags.

    A pre-holiday carries the weekday trend plus its own effect: (1, 0, 1).
    """
    rows = []
    for t, tag in enumerate(tags):
        try:
            rows.append(DayTag(tag).design_row)
        except ValueError as e:
            raise DataValidationError(f"day {t}: unknown calendar tag {tag!r}") from e
    if not rows:
        raise DataValidationError("calendar has no days")
    return np.array(rows, dtype=np.int64)


def period_residual(data: FunctionalDataset, state: McmcState, i: int, t: int, ell: int) -> np.ndarray:
    """y_it minus the trends of every other active period on day t."""
    if not data.w[t, ell]:
        raise DataValidationError(f"day {t} is not in period {ell}")
    out = np.array(data.y[i, t], dtype=float)
    for other, p in enumerate(state.periods):
        if other != ell and data.w[t, other]:
            out -= p.atoms[p.labels[i]]
    return out


def reconstruct(data: FunctionalDataset, state: McmcState, i: int, t: int, ell: int) -> np.ndarray:
    """mu_it + residual_it,ell - theta_{z_i ell, ell}; equals y_it."""
    p = state.periods[ell]
    mu = state.mean_surface(data.w)[i, t]
    return mu + period_residual(data, state, i, t, ell) - p.atoms[p.labels[i]]
