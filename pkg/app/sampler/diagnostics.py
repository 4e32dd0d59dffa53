"""Chain diagnostics and posterior partition summaries."""

from __future__ import annotations

import logging
import warnings
from typing import Sequence, Union

import arviz
import numpy as np

from app.models import Partition

logger = logging.getLogger(__name__)

PartitionDraws = Union[Sequence[Partition], np.ndarray]


def effective_sample_size(trace: np.ndarray) -> float:
    """Autocorrelation-deflated sample size of one scalar trace.

    Uses Geyer's initial monotone positive-pair truncation. A constant
    trace carries one effective draw.
    """
    x = np.asarray(trace, dtype=float).reshape(-1)
    if x.size < 4:
        return float(x.size)
    if np.ptp(x) == 0:
        return 1.0
    dataset = arviz.convert_to_dataset(x[None, :])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ess = float(arviz.ess(dataset, method="mean").x.data)
    if not np.isfinite(ess):
        logger.warning("ESS undefined for a trace of length %d; reporting 1", x.size)
        return 1.0
    return ess


def _label_matrix(draws: PartitionDraws) -> np.ndarray:
    if isinstance(draws, np.ndarray):
        return np.atleast_2d(draws).astype(np.int64)
    return np.stack([p.assignments for p in draws])


def posterior_similarity(draws: PartitionDraws) -> np.ndarray:
    """Mean co-clustering matrix P[i, j] = fraction of draws with z_i = z_j."""
    labels = _label_matrix(draws)
    if labels.shape[0] == 0:
        raise ValueError("posterior similarity needs at least one draw")
    psm = np.zeros((labels.shape[1], labels.shape[1]))
    for z in labels:
        psm += z[:, None] == z[None, :]
    return psm / labels.shape[0]


def binder_loss(partition: Partition, psm: np.ndarray) -> float:
    """sum_{i<j} |1(z_i = z_j) - P_ij|."""
    diff = np.abs(partition.coclustering() - psm)
    return float(np.triu(diff, k=1).sum())


def point_partition(draws: PartitionDraws) -> Partition:
    """Sampled partition with the smallest Binder loss; the earliest draw wins ties."""
    labels = _label_matrix(draws)
    psm = posterior_similarity(labels)
    iu = np.triu_indices(labels.shape[1], k=1)
    losses = np.array([np.abs((z[:, None] == z[None, :])[iu] - psm[iu]).sum() for z in labels])
    best = int(np.argmin(losses))
    return Partition.from_labels(labels[best])


def cluster_count_distribution(draws: PartitionDraws) -> dict[int, float]:
    """Posterior probability of each observed number of clusters."""
    labels = _label_matrix(draws)
    if labels.shape[0] == 0:
        return {}
    ks = labels.max(axis=1) + 1
    values, counts = np.unique(ks, return_counts=True)
    return {int(v): float(c) / ks.size for v, c in zip(values, counts)}
