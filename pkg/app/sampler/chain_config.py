"""Run-file schemas for the posterior sampler (JSON, validated with pydantic)."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy import stats

from app.errors import ConfigError
from app.models import ConditionalMode, ModelVariant


class HyperPriors(BaseModel):
    """Hyperprior parameters.

    alpha ~ Gamma(a_alpha, rate b_alpha); beta ~ Beta(a_beta, b_beta);
    tau ~ Beta(a_tau, b_tau); eta^2 ~ IG(a_eta / 2, b_eta / 2) for both
    eta_y^2 and eta_theta^2; phi ~ IG(a_phi, b_phi); m_theta ~ GP(m_m, c_m I).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    a_alpha: float = Field(5.0, gt=0)
    b_alpha: float = Field(1.0, gt=0)
    a_beta: float = Field(10.0, gt=0)
    b_beta: float = Field(1.0, gt=0)
    a_tau: float = Field(0.5, gt=0)
    b_tau: float = Field(0.5, gt=0)
    a_eta: float = Field(1.0, gt=0)
    b_eta: float = Field(1.0, gt=0)
    a_phi: float = Field(0.5, gt=0)
    b_phi: float = Field(0.5, gt=0)
    m_m: float = 0.5
    c_m: float = Field(10.0, gt=0)

    def log_prior_alpha(self, alpha: float) -> float:
        return float(stats.gamma.logpdf(alpha, self.a_alpha, scale=1.0 / self.b_alpha))

    def log_prior_beta(self, beta: float) -> float:
        return float(stats.beta.logpdf(beta, self.a_beta, self.b_beta))

    def log_prior_tau(self, tau: float) -> float:
        return float(stats.beta.logpdf(tau, self.a_tau, self.b_tau))

    def log_prior_phi(self, phi: float) -> float:
        return float(stats.invgamma.logpdf(phi, self.a_phi, scale=self.b_phi))

    def sample_alpha(self, rng: np.random.Generator, lower: float = 1.0) -> float:
        """Gamma draw restricted to alpha > lower (the sampler's support guard)."""
        while True:
            alpha = rng.gamma(self.a_alpha, 1.0 / self.b_alpha)
            if alpha > lower:
                return float(alpha)

    def sample_beta(self, rng: np.random.Generator) -> float:
        return float(rng.beta(self.a_beta, self.b_beta))

    def sample_tau(self, rng: np.random.Generator) -> float:
        return float(rng.beta(self.a_tau, self.b_tau))

    def sample_eta_sq(self, rng: np.random.Generator) -> float:
        return float(0.5 * self.b_eta / rng.gamma(0.5 * self.a_eta))

    def sample_phi(self, rng: np.random.Generator) -> float:
        return float(self.b_phi / rng.gamma(self.a_phi))


class ProposalScales(BaseModel):
    """Random-walk proposal spreads; read as variances unless ``as_variance`` is false."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tau: float = Field(1e-2, gt=0)
    alpha: float = Field(1e-1, gt=0)
    beta: float = Field(1e-1, gt=0)
    phi_y: float = Field(1e-1, gt=0)
    phi_theta: float = Field(1e-1, gt=0)
    as_variance: bool = True

    def sd(self, name: str) -> float:
        value = getattr(self, name)
        return math.sqrt(value) if self.as_variance else value


class InitialValues(BaseModel):
    """Starting point of each chain; every period starts with one cluster."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(2.0, gt=1)
    beta: float = Field(0.75, gt=0, lt=1)
    tau: float = Field(0.5, gt=0, lt=1)
    eta_y: float = Field(1.0, gt=0)
    phi_y: float = Field(1.0, gt=0)
    eta_theta: float = Field(1.0, gt=0)
    phi_theta: float = Field(1.0, gt=0)


class ChainConfig(BaseModel):
    """Sampler configuration; defaults follow the published run lengths."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    burn_in: int = Field(16000, ge=0)
    samples: int = Field(4000, ge=0)
    thin: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    model: ModelVariant = ModelVariant.SGDP
    conditional_mode: ConditionalMode = ConditionalMode.EXACT
    permute_order: bool = False
    use_likelihood: bool = True
    prior_preset: Optional[str] = None
    priors: HyperPriors = HyperPriors()
    proposals: ProposalScales = ProposalScales()
    init: InitialValues = InitialValues()
    record_grid_points: list[int] = Field(default_factory=list)
    standardize: bool = False

    @model_validator(mode="after")
    def _apply_preset(self) -> ChainConfig:
        from app.sampler.presets import MODEL_PRESETS, PRIOR_PRESETS

        if self.prior_preset is None and "priors" not in self.model_fields_set:
            # a variant with its own hyperpriors brings them along
            object.__setattr__(self, "prior_preset", MODEL_PRESETS.get(self.model))
        if self.prior_preset is not None:
            if self.prior_preset not in PRIOR_PRESETS:
                raise ValueError(
                    f"unknown prior preset {self.prior_preset!r}; "
                    f"choose from {sorted(PRIOR_PRESETS)}"
                )
            if "priors" not in self.model_fields_set:
                object.__setattr__(self, "priors", PRIOR_PRESETS[self.prior_preset])
        return self

    @property
    def total_sweeps(self) -> int:
        return self.burn_in + self.samples

    @property
    def recorded_draws(self) -> int:
        return self.samples // self.thin

    @classmethod
    def from_json(cls, path: str | Path) -> ChainConfig:
        """Load and validate a chain configuration file."""
        return load_json_model(cls, path)


def load_json_model(model_cls, path: str | Path):
    """Parse a JSON file into ``model_cls``, mapping failures to ConfigError."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    try:
        return model_cls.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e
