"""Full conditional of one membership given all the others.

The SGDP is not exchangeable, so p(z_i = j | z_-i) is obtained by
re-evaluating the joint with z_i := j. Only the terms of items i..n-1
depend on j; earlier items' allocation probabilities never see item i.

During a scan the before-counts and the per-cluster similarity sums of
every item are kept for the current labelling. Removing item i and adding
it back to candidate j changes one column of each by a known vector, so a
candidate costs O(n k) instead of a full joint evaluation.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from app.errors import PartitionDomainError
from app.models import AdjacencyStructure, ConditionalMode, SgdpParams, canonical_labels
from app.partition.sgdp import (
    alloc_probs_from_row,
    log_terms_from_counts,
    prefix_statistics,
    sequential_log_terms,
)

logger = logging.getLogger(__name__)


class AssignmentPrior:
    """Partition prior of one period with its similarity matrix and scan caches.

    The lambda(s) matrix is rebuilt only when tau (or lambda) changes.
    The prefix statistics follow the labelling through :meth:`move` and are
    rebuilt by :meth:`reset` or whenever an unknown labelling is passed in.
    """

    def __init__(
        self,
        params: SgdpParams,
        adj: Optional[AdjacencyStructure] = None,
        mode: ConditionalMode = ConditionalMode.EXACT,
    ):
        self.adj = adj
        self.mode = mode
        self._params = params
        self._weights = self._build_weights(params)
        self._labels: Optional[np.ndarray] = None
        self._counts: Optional[np.ndarray] = None
        self._sims: Optional[np.ndarray] = None

    def _build_weights(self, params: SgdpParams) -> Optional[np.ndarray]:
        if self.adj is None or not params.uses_similarity:
            return None
        return self.adj.similarity_weights(params)

    @property
    def params(self) -> SgdpParams:
        return self._params

    @params.setter
    def params(self, params: SgdpParams) -> None:
        old = self._params
        self._params = params
        if params.tau != old.tau or params.lam is not old.lam:
            self._weights = self._build_weights(params)
            self.reset()

    @property
    def weights(self) -> Optional[np.ndarray]:
        return self._weights

    def joint_log_prob(self, labels: np.ndarray) -> float:
        """Joint log-probability of canonical ``labels`` under the cached parameters."""
        return float(
            sequential_log_terms(labels, self._weights, self._params.alpha, self._params.beta).sum()
        )

    # ------------------------------------------------------------------
    # Scan caches
    # ------------------------------------------------------------------

    def reset(self) -> None:
        """Forget the prefix statistics; the next call rebuilds them."""
        self._labels = None
        self._counts = None
        self._sims = None

    def _ensure(self, labels: np.ndarray) -> None:
        if self._labels is not None and np.array_equal(self._labels, labels):
            return
        self._counts, self._sims = prefix_statistics(labels, self._weights)
        self._labels = np.array(labels, dtype=np.int64)

    def move(self, item: int, labels: np.ndarray) -> None:
        """Carry the prefix statistics over to ``labels``, where only ``item`` changed cluster.

        ``labels`` is the new canonical labelling; clusters may have been
        renumbered or emptied by the move.
        """
        if self._labels is None:
            return
        labels = np.asarray(labels, dtype=np.int64)
        old = self._labels
        n = old.size
        a, b = int(old[item]), int(labels[item])
        mates = np.flatnonzero(labels == b)
        mates = mates[mates != item]
        k_old = self._counts.shape[1]
        col_b = int(old[mates[0]]) if mates.size else k_old

        counts = np.hstack([self._counts, np.zeros((n, 1))])
        counts[item + 1:, a] -= 1.0
        counts[item + 1:, col_b] += 1.0
        first = np.unique(labels, return_index=True)[1]
        cols = old[first]
        cols[first == item] = col_b
        self._counts = counts[:, cols]
        if self._sims is not None:
            lam = self._weights[item + 1:n, item]
            sims = np.hstack([self._sims, np.zeros((n, 1))])
            sims[item + 1:, a] -= lam
            sims[item + 1:, col_b] += lam
            self._sims = sims[:, cols]
        self._labels = labels.copy()

    # ------------------------------------------------------------------
    # Conditionals
    # ------------------------------------------------------------------

    def log_weights(self, item: int, others: np.ndarray) -> np.ndarray:
        """Unnormalized log prior weights of item ``item`` joining each cluster.

        Args:
            item: Position of the item in the full sequence.
            others: Canonical labels of every other item, in sequence order.

        Returns:
            Vector of length k+1: the k clusters of ``others`` then a new cluster.
        """
        others = np.asarray(others, dtype=np.int64)
        n = others.size + 1
        if not 0 <= item < n:
            raise PartitionDomainError(f"item {item} outside 0..{n - 1}")
        k = int(others.max()) + 1 if others.size else 0
        if k == 0:
            return np.zeros(1)
        if self.mode is ConditionalMode.TREAT_AS_LAST:
            return np.log(self._as_last(item, others, k))
        labels, _ = canonical_labels(np.insert(others, item, 0))
        return self._exact(item, labels)

    def log_weights_at(self, item: int, labels: np.ndarray) -> np.ndarray:
        """:meth:`log_weights` for ``item`` of the full canonical labelling ``labels``.

        The candidates are the clusters of the other items in their own
        canonical order, then a new cluster.
        """
        labels = np.asarray(labels, dtype=np.int64)
        if not 0 <= item < labels.size:
            raise PartitionDomainError(f"item {item} outside 0..{labels.size - 1}")
        if labels.size == 1:
            return np.zeros(1)
        if self.mode is ConditionalMode.TREAT_AS_LAST:
            others, _ = canonical_labels(np.delete(labels, item))
            return np.log(self._as_last(item, others, int(others.max()) + 1))
        return self._exact(item, labels)

    def _exact(self, item: int, labels: np.ndarray) -> np.ndarray:
        self._ensure(labels)
        old = self._labels
        n = old.size
        a = int(old[item])
        others, old_of_new = canonical_labels(np.delete(old, item))
        k = old_of_new.size
        alpha, beta = self._params.alpha, self._params.beta

        # statistics of items item..n-1 with the item removed, columns in the order of ``others``
        counts = self._counts[item:].copy()
        counts[1:, a] -= 1.0
        counts = np.hstack([counts[:, old_of_new], np.zeros((n - item, 1))])
        sims = lam = None
        if self._sims is not None:
            lam = self._weights[item + 1:n, item]
            sims = self._sims[item:].copy()
            sims[1:, a] -= lam
            sims = np.hstack([sims[:, old_of_new], np.zeros((n - item, 1))])

        first = np.unique(others, return_index=True)[1]
        first_pos = np.append(first + (first >= item), item)
        rest = others[item:]
        positions = np.arange(item, n)
        skip = 1 if item == 0 else 0

        out = np.empty(k + 1)
        for c in range(k + 1):
            fp = first_pos.copy()
            fp[c] = min(fp[c], item)
            width = k + 1 if c == k else k
            order = np.argsort(fp[:width], kind="stable")
            rank = np.empty_like(order)
            rank[order] = np.arange(width)

            cnt = counts[:, :width].copy()
            cnt[1:, c] += 1.0
            sm = None
            if sims is not None:
                sm = sims[:, :width].copy()
                sm[1:, c] += lam
                sm = sm[skip:, order]
            z = rank[np.concatenate(([c], rest))]
            out[c] = log_terms_from_counts(
                cnt[skip:, order], sm, z[skip:], positions[skip:], alpha, beta
            ).sum()
        return out

    def _as_last(self, item: int, others: np.ndarray, k: int) -> np.ndarray:
        sizes = np.bincount(others, minlength=k).astype(float)
        row = None
        if self._weights is not None:
            idx = np.delete(np.arange(others.size + 1), item)
            row = self._weights[item, idx]
        return alloc_probs_from_row(others, sizes, row, self._params.alpha, self._params.beta)


def full_conditional_assignment_prior(
    item: int,
    others: np.ndarray,
    adj: Optional[AdjacencyStructure],
    params: SgdpParams,
    mode: ConditionalMode = ConditionalMode.EXACT,
) -> np.ndarray:
    """Log prior weights of every candidate cluster for ``item`` given the rest.

    Exact mode differs from the joint log-probability with z_item := j only by
    a constant in j. Treat-as-last mode evaluates the sequential rule as if
    ``item`` were the final item and is an approximation.
    """
    return AssignmentPrior(params, adj, mode).log_weights(item, others)
