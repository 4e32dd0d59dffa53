"""Data models for SGDP functional clustering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from app.errors import DataValidationError, PartitionDomainError


def identity(s: np.ndarray) -> np.ndarray:
    """Default similarity map lambda(s) = s."""
    return s


class ModelVariant(str, Enum):
    """Random-partition prior used for each period's memberships."""

    SGDP = "sgdp"
    GDP = "gdp"  # tau fixed at 1: no similarity reweighting
    SDP = "sdp"  # beta = 1 / alpha

    @property
    def uses_similarity(self) -> bool:
        return self is not ModelVariant.GDP


class ConditionalMode(str, Enum):
    """How the non-exchangeable assignment conditional is evaluated."""

    EXACT = "exact"
    TREAT_AS_LAST = "treat_as_last"

    @property
    def is_approximate(self) -> bool:
        return self is ConditionalMode.TREAT_AS_LAST


class DayTag(str, Enum):
    """Calendar tag of one observation day, in period-design order."""

    WEEKDAY = "weekday"
    HOLIDAY = "holiday"
    PRE_HOLIDAY = "pre_holiday"

    @property
    def design_row(self) -> tuple[int, int, int]:
        """Row of the (weekday, holiday, pre-holiday effect) indicator matrix."""
        return {
            DayTag.WEEKDAY: (1, 0, 0),
            DayTag.HOLIDAY: (0, 1, 0),
            # a pre-holiday day carries the weekday trend plus its own effect
            DayTag.PRE_HOLIDAY: (1, 0, 1),
        }[self]


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------


def canonical_labels(labels: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    """Relabel clusters 0..k-1 in order of first appearance.

    Returns:
        (canonical labels, old label of each new label). The second array
        lets callers permute per-cluster quantities (atoms) alongside.
    """
    arr = np.asarray(labels, dtype=np.int64).reshape(-1)
    if arr.size == 0:
        return arr.copy(), np.zeros(0, dtype=np.int64)
    uniq, first, inverse = np.unique(arr, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse].astype(np.int64), uniq[order].astype(np.int64)


@dataclass(frozen=True, eq=False)
class Partition:
    """Cluster assignments of items in sequence order.

    Labels are 0-based and contiguous in order of first appearance, so the
    item with the smallest index in cluster j precedes every item that
    first appears in cluster j + 1.
    """

    assignments: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.assignments, dtype=np.int64).reshape(-1)
        canon, _ = canonical_labels(arr)
        if not np.array_equal(arr, canon):
            raise PartitionDomainError(
                f"labels {arr.tolist()} are not in order of first appearance"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "assignments", arr)

    @classmethod
    def from_labels(cls, labels: Iterable[int]) -> Partition:
        """Build a partition from arbitrary labels by canonicalizing them."""
        canon, _ = canonical_labels(np.asarray(list(labels), dtype=np.int64))
        return cls(canon)

    @property
    def n(self) -> int:
        return int(self.assignments.size)

    @property
    def k(self) -> int:
        return int(self.assignments.max()) + 1 if self.n else 0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def coclustering(self) -> np.ndarray:
        """n x n indicator of items sharing a cluster."""
        z = self.assignments
        return (z[:, None] == z[None, :]).astype(float)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.assignments, other.assignments)

    def __hash__(self) -> int:
        return hash(tuple(self.assignments.tolist()))

    def __repr__(self) -> str:
        return f"Partition({self.assignments.tolist()})"


@dataclass(frozen=True)
class SgdpParams:
    """Parameters of the (similarity-based) GDP partition prior.

    ``tau=None`` switches the similarity reweighting off, which is the plain
    GDP (tau fixed at 1 in the application model).
    """

    alpha: float
    beta: float
    tau: Optional[float] = 0.5
    lam: Callable[[np.ndarray], np.ndarray] = field(default=identity, compare=False)

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise PartitionDomainError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.beta < 1:
            raise PartitionDomainError(f"beta must lie in (0, 1), got {self.beta}")
        if self.tau is not None and not 0 < self.tau < 1:
            raise PartitionDomainError(f"tau must lie in (0, 1), got {self.tau}")
        # A_l(i) has denominator alpha - 1 + S; keep it positive
        if self.alpha <= 1 and not self.is_dirichlet:
            raise PartitionDomainError(
                f"alpha must exceed 1 unless alpha*beta = 1, got alpha={self.alpha}"
            )

    @classmethod
    def dirichlet(cls, alpha: float, tau: Optional[float] = 0.5) -> SgdpParams:
        """Similarity-based DP special case: beta = 1 / alpha."""
        if alpha <= 1:
            raise PartitionDomainError(f"alpha must exceed 1 when beta = 1/alpha, got {alpha}")
        return cls(alpha=alpha, beta=1.0 / alpha, tau=tau)

    @classmethod
    def gdp(cls, alpha: float, beta: float) -> SgdpParams:
        """Plain GDP without similarity."""
        return cls(alpha=alpha, beta=beta, tau=None)

    @property
    def is_dirichlet(self) -> bool:
        return math.isclose(self.alpha * self.beta, 1.0, rel_tol=1e-12, abs_tol=0.0)

    @property
    def uses_similarity(self) -> bool:
        return self.tau is not None

    def with_(self, **changes) -> SgdpParams:
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Spatial structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AdjacencyStructure:
    """Symmetric binary adjacency over spatial units (zero diagonal)."""

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataValidationError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise DataValidationError("adjacency is not symmetric")
        if a.diagonal().any():
            raise DataValidationError("adjacency has a non-zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> AdjacencyStructure:
        """Build from an undirected edge list of 0-based ids."""
        a = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise DataValidationError(f"edge ({i}, {j}) outside 0..{n - 1}")
            if i == j:
                raise DataValidationError(f"self-loop on item {i}")
            a[i, j] = a[j, i] = True
        return cls(a)

    @classmethod
    def empty(cls, n: int) -> AdjacencyStructure:
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def complete(cls, n: int) -> AdjacencyStructure:
        return cls(~np.eye(n, dtype=bool))

    @classmethod
    def block_diagonal(cls, group_sizes: Sequence[int]) -> AdjacencyStructure:
        """Complete graphs within consecutive groups, no edges across."""
        n = int(sum(group_sizes))
        a = np.zeros((n, n), dtype=bool)
        start = 0
        for size in group_sizes:
            a[start:start + size, start:start + size] = True
            start += size
        np.fill_diagonal(a, False)
        return cls(a)

    @property
    def n(self) -> int:
        return int(self.adjacency.shape[0])

    def edges(self) -> np.ndarray:
        """Edge list (i < j) as an m x 2 integer array."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return np.column_stack([i, j]).astype(np.int64)

    def similarity(self, tau: float) -> np.ndarray:
        """s_ii' = 1 for adjacent units, tau otherwise (diagonal set to 1)."""
        s = np.where(self.adjacency, 1.0, tau)
        np.fill_diagonal(s, 1.0)
        return s

    def similarity_weights(self, params: SgdpParams) -> Optional[np.ndarray]:
        """lambda(s) matrix for ``params``; None when similarity is off."""
        if not params.uses_similarity:
            return None
        return np.asarray(params.lam(self.similarity(params.tau)), dtype=float)

    def with_edge(self, i: int, j: int) -> AdjacencyStructure:
        a = self.adjacency.copy()
        a[i, j] = a[j, i] = True
        return AdjacencyStructure(a)


# ---------------------------------------------------------------------------
# Functional observations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """Curves y[i, t, :] on a shared grid with a day-to-period design.

    ``w`` is the T x M period-indicator matrix: w[t, l] = 1 when day t
    carries period l's additive trend.
    """

    y: np.ndarray
    grid: np.ndarray
    w: np.ndarray
    adjacency: AdjacencyStructure
    standardized: bool = False
    day_tags: Optional[tuple[DayTag, ...]] = None
    period_names: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        w = np.asarray(self.w)
        if y.ndim != 3:
            raise DataValidationError(f"y must be n x T x |X|, got shape {y.shape}")
        n, T, d = y.shape
        if n < 1 or T < 1 or d < 1:
            raise DataValidationError(f"empty dataset of shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise DataValidationError("observations contain missing or non-finite values")
        if grid.size != d:
            raise DataValidationError(f"grid has {grid.size} points but curves have {d}")
        if not np.all(np.isfinite(grid)) or np.unique(grid).size != d:
            raise DataValidationError("grid points must be finite and distinct")
        if w.ndim != 2 or w.shape[0] != T:
            raise DataValidationError(f"w must be T x M with T={T}, got shape {w.shape}")
        if not np.isin(w, (0, 1)).all():
            raise DataValidationError("period indicators must be 0/1")
        if (w.sum(axis=0) < 1).any():
            raise DataValidationError("every period needs at least one day")
        if (w.sum(axis=1) < 1).any():
            bad = np.flatnonzero(w.sum(axis=1) < 1).tolist()
            raise DataValidationError(f"days {bad} belong to no period")
        if self.adjacency.n != n:
            raise DataValidationError(
                f"adjacency covers {self.adjacency.n} units but data has {n} areas"
            )
        if self.period_names is not None and len(self.period_names) != w.shape[1]:
            raise DataValidationError(
                f"{len(self.period_names)} period names for {w.shape[1]} periods"
            )
        y.setflags(write=False)
        w = w.astype(np.int64)
        w.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def T(self) -> int:
        return int(self.y.shape[1])

    @property
    def d(self) -> int:
        return int(self.y.shape[2])

    @property
    def M(self) -> int:
        return int(self.w.shape[1])

    def period_name(self, ell: int) -> str:
        if self.period_names is None:
            return f"period_{ell}"
        return self.period_names[ell]

    def period_days(self, ell: int) -> np.ndarray:
        """Indices of days with w[t, ell] = 1."""
        return np.flatnonzero(self.w[:, ell])

    def with_y(self, y: np.ndarray, standardized: Optional[bool] = None) -> FunctionalDataset:
        return replace(
            self,
            y=y,
            standardized=self.standardized if standardized is None else standardized,
        )
