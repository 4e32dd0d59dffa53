"""Named hyperprior presets.

prior1 / prior2 are the two simulation priors on (alpha, beta);
application is the setting used for the hourly population study;
sdp pairs with model=sdp (beta = 1/alpha, alpha ~ Gamma(1, 1)).
All share tau ~ Beta(1/2, 1/2), eta^2 and phi ~ IG(1/2, 1/2), m_m = 1/2, C_m = 10 I.
"""

from __future__ import annotations

from app.models import ModelVariant
from app.sampler.chain_config import HyperPriors

PRIOR_PRESETS: dict[str, HyperPriors] = {
    "prior1": HyperPriors(a_alpha=2.0, b_alpha=1.0, a_beta=5.0, b_beta=1.0),
    "prior2": HyperPriors(a_alpha=5.0, b_alpha=1.0, a_beta=20.0, b_beta=1.0),
    "application": HyperPriors(a_alpha=5.0, b_alpha=1.0, a_beta=10.0, b_beta=1.0),
    "sdp": HyperPriors(a_alpha=1.0, b_alpha=1.0),
}

# Default preset
DEFAULT_PRESET = "application"

# Preset a model variant falls back to when the run names neither a preset nor priors
MODEL_PRESETS: dict[ModelVariant, str] = {
    ModelVariant.SDP: "sdp",
}
