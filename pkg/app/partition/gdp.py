"""Sequential allocation rule of the GDP-induced random partition.

For item i with k clusters among the first i-1 items,

    p(z_i = j)     = (ab + N_j - 1) / (a + i - 2) * prod_{l<j} A_l(i)
    p(z_i = k + 1) = a(1 - b) / (a + i - 2) * prod_{l<k} A_l(i)

with A_l(i) = (a - ab + S_l) / (a - 1 + S_l) and S_l the total size of the
clusters after l. With ab = 1 every A_l is 1 and the rule is the Chinese
restaurant process with concentration a - 1.
"""

from __future__ import annotations

import math

import numpy as np

from app.errors import PartitionDomainError
from app.models import Partition


def a_factor(tail_sum: float, alpha: float, beta: float) -> float:
    """Tail-size correction A_l(i) for one cluster index.

    Args:
        tail_sum: Sum of the sizes of clusters l+1..k among the prefix.
        alpha: GDP alpha.
        beta: GDP beta.
    """
    return float(a_factors(np.asarray([tail_sum], dtype=float), alpha, beta)[0])


def a_factors(tail_sums: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Vectorized :func:`a_factor`."""
    denom = alpha - 1.0 + tail_sums
    if np.any(denom <= 0):
        raise PartitionDomainError(
            f"A factor undefined: alpha - 1 + S <= 0 (alpha={alpha}, S={tail_sums.min()})"
        )
    return (alpha - alpha * beta + tail_sums) / denom


def tail_sums(sizes: np.ndarray) -> np.ndarray:
    """S_l = sum of sizes[l+1:] for every cluster index l."""
    sizes = np.asarray(sizes, dtype=float)
    return np.cumsum(sizes[::-1])[::-1] - sizes


def stick_products(sizes: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """prod_{l<j} A_l for j = 0..k-1 (the last cluster's product is reused for a new cluster)."""
    k = len(sizes)
    if k == 0:
        return np.ones(0)
    factors = a_factors(tail_sums(sizes)[: k - 1], alpha, beta)
    return np.concatenate([[1.0], np.cumprod(factors)])


def gdp_terms(sizes: np.ndarray, alpha: float, beta: float) -> tuple[np.ndarray, float, float]:
    """Unnormalized GDP allocation weights.

    Returns:
        (existing-cluster numerators, new-cluster numerator, common denominator).
    """
    sizes = np.asarray(sizes, dtype=float)
    products = stick_products(sizes, alpha, beta)
    existing = (alpha * beta + sizes - 1.0) * products
    new = alpha * (1.0 - beta) * products[-1]
    denom = alpha + sizes.sum() - 1.0
    return existing, new, denom


def gdp_alloc_probs(prefix: Partition, alpha: float, beta: float) -> np.ndarray:
    """Allocation probabilities of the next item given ``prefix``.

    Entries 0..k-1 are the existing clusters, entry k a new cluster.
    """
    if prefix.n == 0:
        raise PartitionDomainError("the first item is assigned to cluster 0 with probability 1")
    existing, new, denom = gdp_terms(prefix.sizes, alpha, beta)
    return np.append(existing, new) / denom


def new_cluster_prob(prefix: Partition, alpha: float, beta: float) -> float:
    """Probability that the next item opens a new cluster (same under GDP and SGDP)."""
    return float(gdp_alloc_probs(prefix, alpha, beta)[-1])


def ewens_log_prob(z: Partition, theta: float) -> float:
    """Log-probability of ``z`` under the Ewens sequential rule with concentration ``theta``."""
    labels = z.assignments
    sizes: list[int] = []
    total = 0.0
    for i, label in enumerate(labels):
        if i > 0:
            numer = theta if label == len(sizes) else sizes[label]
            total += math.log(numer / (theta + i))
        if label == len(sizes):
            sizes.append(1)
        else:
            sizes[label] += 1
    return total
