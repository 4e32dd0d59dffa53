"""GDP and similarity-based GDP random-partition distributions."""

from app.partition.gdp import (
    a_factor,
    ewens_log_prob,
    gdp_alloc_probs,
    new_cluster_prob,
)
from app.partition.sgdp import (
    expected_cluster_count,
    joint_log_prob,
    omega,
    omega_star,
    sample_prior_partition,
    sgdp_alloc_probs,
)
from app.partition.conditional import AssignmentPrior, full_conditional_assignment_prior
from app.partition.enumerate import set_partitions

__all__ = [
    "AssignmentPrior",
    "a_factor",
    "ewens_log_prob",
    "expected_cluster_count",
    "full_conditional_assignment_prior",
    "gdp_alloc_probs",
    "joint_log_prob",
    "new_cluster_prob",
    "omega",
    "omega_star",
    "sample_prior_partition",
    "set_partitions",
    "sgdp_alloc_probs",
]
