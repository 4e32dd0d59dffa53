import numpy as np
import pytest

from app.errors import DataValidationError
from app.models import AdjacencyStructure, DayTag, FunctionalDataset
from app.sampler import ChainConfig, initial_state
from app.spatiotemporal import (
    build_period_design,
    period_residual,
    reconstruct,
    standardize,
    standardize_dataset,
)


def test_design_rows():
    w = build_period_design(["weekday", DayTag.HOLIDAY, "pre_holiday"])
    np.testing.assert_array_equal(w, [[1, 0, 0], [0, 1, 0], [1, 0, 1]])


def test_design_rejects_unknown_tag():
    with pytest.raises(DataValidationError):
        build_period_design(["weekday", "sunday"])


def test_design_rejects_empty_calendar():
    with pytest.raises(DataValidationError):
        build_period_design([])


def test_standardize_constant_data():
    out = standardize(np.full((3, 2, 4), 7.0))
    np.testing.assert_allclose(out, 1.0)


def test_standardize_squares_sum_to_curve_count(rng):
    raw = rng.gamma(2.0, 3.0, size=(5, 4, 6))
    out = standardize(raw)
    np.testing.assert_allclose((out ** 2).sum(axis=(0, 1)), 5 * 4)


def test_standardize_rejects_negative_and_zero_columns():
    with pytest.raises(DataValidationError):
        standardize(-np.ones((2, 2, 2)))
    raw = np.ones((2, 2, 3))
    raw[..., 1] = 0.0
    with pytest.raises(DataValidationError):
        standardize(raw)


def test_standardize_dataset_once(tiny_dataset):
    data = tiny_dataset.with_y(np.abs(tiny_dataset.y))
    once = standardize_dataset(data)
    assert once.standardized
    assert standardize_dataset(once) is once


@pytest.fixture
def calendar_dataset(rng):
    tags = (DayTag.WEEKDAY, DayTag.PRE_HOLIDAY, DayTag.HOLIDAY, DayTag.WEEKDAY)
    return FunctionalDataset(
        y=rng.normal(size=(3, 4, 2)),
        grid=np.array([0.0, 1.0]),
        w=build_period_design(tags),
        adjacency=AdjacencyStructure.from_edges(3, [(0, 1), (1, 2)]),
        day_tags=tags,
    )


@pytest.fixture
def calendar_state(calendar_dataset, rng):
    state = initial_state(calendar_dataset, ChainConfig())
    for p in state.periods:
        p.relabel(np.array([0, 1, 0]), rng.normal(size=(2, 2)))
    return state


def test_residual_removes_other_active_periods(calendar_dataset, calendar_state):
    # day 1 is a pre-holiday: weekday trend plus the pre-holiday effect
    weekday, _, pre = calendar_state.periods
    expected = calendar_dataset.y[1, 1] - pre.atoms[pre.labels[1]]
    np.testing.assert_allclose(period_residual(calendar_dataset, calendar_state, 1, 1, 0), expected)
    expected = calendar_dataset.y[2, 1] - weekday.atoms[weekday.labels[2]]
    np.testing.assert_allclose(period_residual(calendar_dataset, calendar_state, 2, 1, 2), expected)


def test_residual_on_single_period_day(calendar_dataset, calendar_state):
    np.testing.assert_allclose(
        period_residual(calendar_dataset, calendar_state, 0, 2, 1), calendar_dataset.y[0, 2]
    )


def test_residual_rejects_inactive_period(calendar_dataset, calendar_state):
    with pytest.raises(DataValidationError):
        period_residual(calendar_dataset, calendar_state, 0, 0, 1)


def test_reconstruction_identity(calendar_dataset, calendar_state):
    for i in range(calendar_dataset.n):
        for t in range(calendar_dataset.T):
            for ell in np.flatnonzero(calendar_dataset.w[t]):
                np.testing.assert_allclose(
                    reconstruct(calendar_dataset, calendar_state, i, t, int(ell)),
                    calendar_dataset.y[i, t],
                    atol=1e-12,
                )


def test_sampler_period_sums_agree(calendar_dataset, calendar_state):
    from app.sampler import GibbsSampler

    sampler = GibbsSampler(calendar_dataset, ChainConfig(), calendar_state)
    for ell in range(calendar_dataset.M):
        totals, count = sampler.period_sums(ell)
        days = calendar_dataset.period_days(ell)
        assert count == days.size
        for i in range(calendar_dataset.n):
            expected = sum(period_residual(calendar_dataset, calendar_state, i, int(t), ell) for t in days)
            np.testing.assert_allclose(totals[i], expected, atol=1e-12)
