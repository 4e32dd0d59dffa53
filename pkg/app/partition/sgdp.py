"""Similarity-based GDP: existing-cluster probabilities reweighted by spatial similarity.

The new-cluster probability is the GDP one. Existing clusters share the
GDP's total existing mass, redistributed in proportion to

    omega*_j(i) = sum_{i'<i, z_i'=j} lambda(s_ii') / sum_{i'<i} lambda(s_ii')
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from app.errors import PartitionDomainError
from app.models import AdjacencyStructure, Partition, SgdpParams
from app.partition.gdp import gdp_alloc_probs, gdp_terms

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Single-step quantities
# ---------------------------------------------------------------------------


def omega_star_from_row(labels: np.ndarray, k: int, weights_row: np.ndarray) -> np.ndarray:
    """omega*_j for every cluster j given lambda(s) between the new item and each prefix item."""
    denom = float(weights_row.sum())
    if not denom > 0:
        raise PartitionDomainError("similarity weights of the prefix sum to zero")
    return np.bincount(labels, weights=weights_row, minlength=k) / denom


def omega_from_star(star: np.ndarray, existing: np.ndarray) -> np.ndarray:
    """Normalize omega* so the reweighted existing mass equals the GDP existing mass."""
    denom = float(star @ existing)
    if not denom > 0:
        raise PartitionDomainError("omega normalizing denominator is zero")
    return existing.sum() / denom * star


def alloc_probs_from_row(
    labels: np.ndarray,
    sizes: np.ndarray,
    weights_row: Optional[np.ndarray],
    alpha: float,
    beta: float,
) -> np.ndarray:
    """Allocation probabilities for one item; ``weights_row=None`` gives the GDP rule."""
    existing, new, denom = gdp_terms(sizes, alpha, beta)
    probs = np.append(existing, new) / denom
    if weights_row is not None:
        star = omega_star_from_row(labels, len(sizes), weights_row)
        probs[:-1] *= omega_from_star(star, existing)
    return probs


def _weights_row(prefix: Partition, adj: AdjacencyStructure, params: SgdpParams, item: Optional[int]) -> np.ndarray:
    if not params.uses_similarity:
        raise PartitionDomainError("similarity weights requested with tau=None")
    item = prefix.n if item is None else item
    if item < prefix.n:
        raise PartitionDomainError(f"item {item} lies inside the prefix of length {prefix.n}")
    s = adj.similarity(params.tau)[item, : prefix.n]
    return np.asarray(params.lam(s), dtype=float)


def omega_star(
    prefix: Partition,
    adj: AdjacencyStructure,
    params: SgdpParams,
    item: Optional[int] = None,
) -> np.ndarray:
    """Similarity share omega*_j(i) of each existing cluster.

    Args:
        prefix: Assignments of items 0..i-1.
        adj: Adjacency over all items.
        params: Prior parameters (tau and lambda are used).
        item: Index of the item being allocated; defaults to ``prefix.n``.
    """
    if prefix.n == 0:
        raise PartitionDomainError("omega* needs at least one prior item")
    return omega_star_from_row(prefix.assignments, prefix.k, _weights_row(prefix, adj, params, item))


def omega(
    prefix: Partition,
    adj: AdjacencyStructure,
    params: SgdpParams,
    item: Optional[int] = None,
) -> np.ndarray:
    """Mass-preserving similarity weights omega_j(i), proportional to omega*_j(i)."""
    star = omega_star(prefix, adj, params, item)
    existing, _, _ = gdp_terms(prefix.sizes, params.alpha, params.beta)
    return omega_from_star(star, existing)


def sgdp_alloc_probs(
    prefix: Partition,
    adj: Optional[AdjacencyStructure],
    params: SgdpParams,
    item: Optional[int] = None,
) -> np.ndarray:
    """Allocation probabilities of the next item under the SGDP.

    The last entry (new cluster) is taken from the GDP vector unchanged.
    """
    probs = gdp_alloc_probs(prefix, params.alpha, params.beta)
    if adj is None or not params.uses_similarity:
        return probs
    probs[:-1] *= omega(prefix, adj, params, item)
    return probs


# ---------------------------------------------------------------------------
# Joint probability
# ---------------------------------------------------------------------------


def log_terms_from_counts(
    counts: np.ndarray,
    sims: Optional[np.ndarray],
    z: np.ndarray,
    positions: np.ndarray,
    alpha: float,
    beta: float,
) -> np.ndarray:
    """log p(z_t | z_0..z_{t-1}) from per-item prefix statistics.

    Args:
        counts: m x k cluster sizes among the items before each item, columns in
            order of first appearance.
        sims: m x k sums of lambda(s) between each item and the earlier members
            of every cluster, or None for the GDP.
        z: Canonical label of each item.
        positions: Sequence index t of each item (t >= 1).
        alpha: GDP alpha.
        beta: GDP beta.
    """
    k = counts.shape[1]
    present = counts > 0
    k_t = present.sum(axis=1)

    # A_l for l < k_t - 1; other slots are multiplied in as 1
    tails = counts.sum(axis=1, keepdims=True) - np.cumsum(counts, axis=1)
    used = np.arange(k)[None, :] < (k_t[:, None] - 1)
    denom_a = alpha - 1.0 + tails
    if np.any(denom_a[used] <= 0):
        raise PartitionDomainError(f"A factor undefined for alpha={alpha}")
    factors = np.ones_like(tails)
    factors[used] = (alpha - alpha * beta + tails[used]) / denom_a[used]
    products = np.ones_like(factors)
    products[:, 1:] = np.cumprod(factors[:, :-1], axis=1)

    existing = np.where(present, (alpha * beta + counts - 1.0) * products, 0.0)
    denom = alpha + positions - 1.0
    is_new = z == k_t
    out = np.empty(z.size)

    new_idx = np.flatnonzero(is_new)
    if new_idx.size:
        last = products[new_idx, k_t[new_idx] - 1]
        out[new_idx] = np.log(alpha * (1.0 - beta) * last / denom[new_idx])

    old_idx = np.flatnonzero(~is_new)
    if old_idx.size:
        zj = z[old_idx]
        g = existing[old_idx, zj]
        if sims is None:
            out[old_idx] = np.log(g / denom[old_idx])
        else:
            w_rows = sims[old_idx]
            totals = w_rows.sum(axis=1)
            if np.any(totals <= 0):
                raise PartitionDomainError("similarity weights of a prefix sum to zero")
            star = w_rows / totals[:, None]
            norm = (star * existing[old_idx]).sum(axis=1)
            if np.any(norm <= 0):
                raise PartitionDomainError("omega normalizing denominator is zero")
            om = existing[old_idx].sum(axis=1) / norm * star[np.arange(old_idx.size), zj]
            out[old_idx] = np.log(om * g / denom[old_idx])
    return out


def prefix_statistics(
    labels: np.ndarray,
    weights: Optional[np.ndarray],
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Before-counts and similarity sums (both n x k) of every item of a canonical labelling."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    onehot = np.zeros((n, int(labels.max()) + 1))
    onehot[np.arange(n), labels] = 1.0
    counts = np.cumsum(onehot, axis=0) - onehot
    sims = None if weights is None else np.tril(weights[:n, :n], -1) @ onehot
    return counts, sims


def sequential_log_terms(
    labels: np.ndarray,
    weights: Optional[np.ndarray],
    alpha: float,
    beta: float,
    start: int = 1,
) -> np.ndarray:
    """log p(z_t | z_0..z_{t-1}) for t = max(start, 1)..n-1, vectorized over t.

    Args:
        labels: Canonical labels of all n items.
        weights: n x n lambda(s) matrix, or None for the GDP.
        alpha: GDP alpha.
        beta: GDP beta.
        start: First item whose term is returned.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    start = max(start, 1)
    if start >= n:
        return np.zeros(0)
    counts, sims = prefix_statistics(labels, weights)
    rows = np.arange(start, n)
    return log_terms_from_counts(
        counts[rows], None if sims is None else sims[rows], labels[rows], rows, alpha, beta
    )


def joint_log_prob(
    z: Partition,
    adj: Optional[AdjacencyStructure],
    params: SgdpParams,
) -> float:
    """Sum over items of the log allocation probability given the prefix.

    ``adj=None`` or ``params.tau=None`` evaluates the GDP joint.
    """
    weights = adj.similarity_weights(params) if adj is not None else None
    if weights is not None and adj.n < z.n:
        raise PartitionDomainError(f"adjacency covers {adj.n} items, partition has {z.n}")
    return float(sequential_log_terms(z.assignments, weights, params.alpha, params.beta).sum())


# ---------------------------------------------------------------------------
# Prior simulation
# ---------------------------------------------------------------------------


def sample_prior_partition(
    n: int,
    adj: Optional[AdjacencyStructure],
    params: SgdpParams,
    rng: np.random.Generator,
) -> Partition:
    """Draw a partition of ``n`` items by sequential allocation.

    ``adj=None`` (or tau=None) samples the GDP partition.
    """
    if n < 1:
        raise PartitionDomainError(f"n must be at least 1, got {n}")
    weights = adj.similarity_weights(params) if adj is not None else None
    labels = np.zeros(n, dtype=np.int64)
    sizes = np.zeros(n, dtype=float)
    sizes[0] = 1.0
    k = 1
    for i in range(1, n):
        row = weights[i, :i] if weights is not None else None
        probs = alloc_probs_from_row(labels[:i], sizes[:k], row, params.alpha, params.beta)
        cdf = np.cumsum(probs)
        c = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        c = min(c, k)
        labels[i] = c
        sizes[c] += 1.0
        if c == k:
            k += 1
    return Partition(labels)


def expected_cluster_count(
    n: int,
    params: SgdpParams,
    draws: int,
    rng: np.random.Generator,
    adj: Optional[AdjacencyStructure] = None,
) -> float:
    """Monte-Carlo mean number of clusters among ``n`` items under the prior."""
    counts = [sample_prior_partition(n, adj, params, rng).k for _ in range(draws)]
    logger.debug("prior cluster count at n=%d: mean %.3f over %d draws", n, np.mean(counts), draws)
    return float(np.mean(counts))
