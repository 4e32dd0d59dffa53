"""Clustering and estimation quality: adjusted Rand index, purity, RMSE."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from sklearn.metrics import adjusted_rand_score
from sklearn.metrics.cluster import contingency_matrix

from app.errors import DataValidationError
from app.models import Partition

PartitionLike = Union[Partition, Iterable[int]]


def _as_partition(p: PartitionLike) -> Partition:
    return p if isinstance(p, Partition) else Partition.from_labels(p)


@dataclass(frozen=True)
class LabeledPartitionPair:
    """Ground-truth and estimated partitions of the same items."""

    truth: Partition
    estimate: Partition

    def __post_init__(self) -> None:
        object.__setattr__(self, "truth", _as_partition(self.truth))
        object.__setattr__(self, "estimate", _as_partition(self.estimate))
        if self.truth.n != self.estimate.n:
            raise DataValidationError(
                f"truth has {self.truth.n} items but estimate has {self.estimate.n}"
            )


def adjusted_rand_index(pair: LabeledPartitionPair) -> float:
    """Hubert-Arabie adjusted Rand index; 1.0 when both partitions are a single cluster."""
    return float(adjusted_rand_score(pair.truth.assignments, pair.estimate.assignments))


def purity(pair: LabeledPartitionPair) -> float:
    """Fraction of items in the majority truth class of their estimated cluster."""
    table = contingency_matrix(pair.truth.assignments, pair.estimate.assignments)
    return float(table.max(axis=0).sum() / pair.truth.n)


def rmse(estimated_means: np.ndarray, true_means: np.ndarray) -> float:
    """Root mean squared error over every area and grid point."""
    est = np.asarray(estimated_means, dtype=float)
    true = np.asarray(true_means, dtype=float)
    if est.shape != true.shape:
        raise DataValidationError(f"mean arrays differ in shape: {est.shape} vs {true.shape}")
    return float(np.sqrt(np.mean((est - true) ** 2)))


def evaluate(
    truth: PartitionLike,
    estimate: PartitionLike,
    estimated_means: np.ndarray,
    true_means: np.ndarray,
) -> dict[str, float]:
    """ARI, purity and RMSE in one record."""
    pair = LabeledPartitionPair(truth, estimate)
    return {
        "ari": adjusted_rand_index(pair),
        "purity": purity(pair),
        "rmse": rmse(estimated_means, true_means),
    }
