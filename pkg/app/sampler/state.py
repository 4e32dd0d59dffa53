"""Mutable state of one Markov chain."""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass

import numpy as np

from app.errors import NumericError, PartitionDomainError
from app.gp import GpSpec
from app.models import FunctionalDataset, ModelVariant, SgdpParams, canonical_labels
from app.sampler.chain_config import ChainConfig

logger = logging.getLogger(__name__)


@dataclass
class PeriodState:
    """Partition, atoms and hyperparameters of one period's mixture."""

    labels: np.ndarray
    atoms: np.ndarray
    m_theta: np.ndarray
    params: SgdpParams
    theta_spec: GpSpec

    @property
    def k(self) -> int:
        return int(self.atoms.shape[0])

    def area_curves(self) -> np.ndarray:
        """n x |X| atom of each area's cluster."""
        return self.atoms[self.labels]

    def relabel(self, labels: np.ndarray, atoms: np.ndarray) -> None:
        """Store ``labels`` in canonical form with ``atoms`` permuted alongside."""
        canon, old_of_new = canonical_labels(labels)
        self.labels = canon
        self.atoms = np.asarray(atoms, dtype=float)[old_of_new]


@dataclass
class McmcState:
    periods: list[PeriodState]
    y_spec: GpSpec

    @property
    def M(self) -> int:
        return len(self.periods)

    def period_curves(self) -> np.ndarray:
        """M x n x |X| stack of per-period area curves."""
        return np.stack([p.area_curves() for p in self.periods])

    def mean_surface(self, w: np.ndarray) -> np.ndarray:
        """mu[i, t] = sum_l w[t, l] theta_{z_il, l}, shape n x T x |X|."""
        return np.einsum("tl,lid->itd", np.asarray(w, dtype=float), self.period_curves())

    def copy(self) -> McmcState:
        return copy.deepcopy(self)

    def validate(self, n: int) -> None:
        """Check labels, atom counts and finiteness.

        Raises:
            PartitionDomainError: labels are not canonical or do not match the atoms.
            NumericError: an atom or mean function is non-finite.
        """
        for ell, p in enumerate(self.periods):
            canon, _ = canonical_labels(p.labels)
            if p.labels.size != n or not np.array_equal(canon, p.labels):
                raise PartitionDomainError(f"period {ell}: labels are not canonical over {n} areas")
            if p.k != int(p.labels.max()) + 1:
                raise PartitionDomainError(f"period {ell}: {p.k} atoms for {int(p.labels.max()) + 1} clusters")
            if not (np.all(np.isfinite(p.atoms)) and np.all(np.isfinite(p.m_theta))):
                raise NumericError(f"period {ell}: non-finite atom or mean function")


def initial_params(config: ChainConfig) -> SgdpParams:
    """Partition parameters at the start of a chain for the configured model."""
    init = config.init
    if config.model is ModelVariant.SDP:
        return SgdpParams.dirichlet(init.alpha, init.tau)
    if config.model is ModelVariant.GDP:
        return SgdpParams.gdp(init.alpha, init.beta)
    return SgdpParams(alpha=init.alpha, beta=init.beta, tau=init.tau)


def initial_state(data: FunctionalDataset, config: ChainConfig) -> McmcState:
    """One cluster per period with its atom at the prior mean of m_theta."""
    init = config.init
    m_theta = np.full(data.d, config.priors.m_m)
    periods = [
        PeriodState(
            labels=np.zeros(data.n, dtype=np.int64),
            atoms=m_theta[None, :].copy(),
            m_theta=m_theta.copy(),
            params=initial_params(config),
            theta_spec=GpSpec(data.grid, init.eta_theta, init.phi_theta),
        )
        for _ in range(data.M)
    ]
    logger.debug("initial state: %d periods, %d areas, one cluster each", data.M, data.n)
    return McmcState(periods=periods, y_spec=GpSpec(data.grid, init.eta_y, init.phi_y))
