"""RBF Gaussian-process numerics on a shared evaluation grid."""

from app.gp.kernels import CholeskyFactor, GpSpec, MeanFunction, cholesky, gram, rbf_correlation
from app.gp.gaussian import (
    NewClusterMarginal,
    m_theta_full_conditional,
    marginal_loglik_new_cluster,
    mvn_logpdf,
    sample_gp,
    theta_full_conditional,
    theta_posterior_from_stats,
)

__all__ = [
    "CholeskyFactor",
    "GpSpec",
    "MeanFunction",
    "NewClusterMarginal",
    "cholesky",
    "gram",
    "m_theta_full_conditional",
    "marginal_loglik_new_cluster",
    "mvn_logpdf",
    "rbf_correlation",
    "sample_gp",
    "theta_full_conditional",
    "theta_posterior_from_stats",
]
