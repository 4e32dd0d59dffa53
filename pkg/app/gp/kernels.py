"""RBF kernel Gram matrices and jittered Cholesky factorization."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy import linalg

from app.config import settings
from app.errors import NumericError

logger = logging.getLogger(__name__)

# Mean functions are plain vectors of values on the grid
MeanFunction = np.ndarray


def rbf_correlation(grid: np.ndarray, phi: float) -> np.ndarray:
    """R[a, b] = exp(-(x_a - x_b)^2 / phi^2) on scalar grid points."""
    x = np.asarray(grid, dtype=float).reshape(-1)
    diff = x[:, None] - x[None, :]
    return np.exp(-(diff * diff) / (phi * phi))


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower Cholesky factor of an SPD matrix plus the matrix actually factorized."""

    lower: np.ndarray
    matrix: np.ndarray

    @cached_property
    def logdet(self) -> float:
        return float(2.0 * np.log(np.diag(self.lower)).sum())

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def solve(self, b: np.ndarray) -> np.ndarray:
        """matrix^{-1} b."""
        return linalg.cho_solve((self.lower, True), b, check_finite=False)

    def whiten(self, b: np.ndarray) -> np.ndarray:
        """L^{-1} b, so that |L^{-1} b|^2 is the Mahalanobis form."""
        return linalg.solve_triangular(self.lower, b, lower=True, check_finite=False)

    @cached_property
    def inverse(self) -> np.ndarray:
        inv = self.solve(np.eye(self.dim))
        return 0.5 * (inv + inv.T)


def cholesky(
    matrix: np.ndarray,
    jitter: float = 0.0,
    retries: Optional[int] = None,
) -> CholeskyFactor:
    """Factorize ``matrix``, adding ``jitter`` x10 per retry on failure.

    Raises:
        NumericError: if the matrix is still not positive definite after all retries.
    """
    retries = settings.jitter_retries if retries is None else retries
    a = np.asarray(matrix, dtype=float)
    a = 0.5 * (a + a.T)
    extra = 0.0
    step = jitter if jitter > 0 else settings.jitter_scale * max(float(np.mean(np.diag(a))), 1.0)
    for attempt in range(retries + 1):
        candidate = a if extra == 0.0 else a + extra * np.eye(a.shape[0])
        try:
            lower = linalg.cholesky(candidate, lower=True, check_finite=True)
            if attempt:
                logger.warning("Cholesky succeeded after adding jitter %.3g", extra)
            return CholeskyFactor(lower=lower, matrix=candidate)
        except (linalg.LinAlgError, ValueError):
            step *= 10.0
            extra = step
    raise NumericError(f"Cholesky factorization failed after {retries} jitter escalations")


@dataclass(frozen=True, eq=False)
class GpSpec:
    """RBF kernel eta^2 exp(-|x - x'|^2 / phi^2) on a fixed grid.

    ``jitter`` defaults to ``settings.jitter_scale * eta^2``.
    """

    grid: np.ndarray
    eta: float
    phi: float
    jitter: Optional[float] = field(default=None)

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        if not np.all(np.isfinite(grid)) or np.unique(grid).size != grid.size:
            raise ValueError("grid points must be finite and distinct")
        if not (self.eta > 0 and self.phi > 0):
            raise ValueError(f"eta and phi must be positive, got eta={self.eta}, phi={self.phi}")
        jitter = settings.default_jitter(self.eta) if self.jitter is None else self.jitter
        if not jitter > 0:
            raise ValueError(f"jitter must be positive, got {jitter}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "jitter", float(jitter))

    @property
    def dim(self) -> int:
        return int(self.grid.size)

    def with_(self, eta: Optional[float] = None, phi: Optional[float] = None) -> GpSpec:
        """Same grid with new parameters; jitter is re-derived from eta."""
        return GpSpec(
            grid=self.grid,
            eta=self.eta if eta is None else eta,
            phi=self.phi if phi is None else phi,
        )

    @cached_property
    def gram(self) -> np.ndarray:
        return gram(self)

    @cached_property
    def factor(self) -> CholeskyFactor:
        return cholesky(self.gram, jitter=self.jitter)


def gram(spec: GpSpec) -> np.ndarray:
    """C[a, b] = eta^2 exp(-(x_a - x_b)^2 / phi^2) + jitter * 1{a = b}."""
    c = spec.eta * spec.eta * rbf_correlation(spec.grid, spec.phi)
    c[np.diag_indices_from(c)] += spec.jitter
    return c


CovarianceLike = Union[np.ndarray, CholeskyFactor]


def as_factor(cov: CovarianceLike) -> CholeskyFactor:
    """Accept a covariance matrix or an existing factor."""
    if isinstance(cov, CholeskyFactor):
        return cov
    return cholesky(cov)
