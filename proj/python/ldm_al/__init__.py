"""Python bindings for LDM estimation and LDM-S active learning."""

from ._ldm import (
    Model,
    compute_weights,
    estimate_ldm_pool,
    generate,
    ldm_seeded_select,
    paired_t_score,
    penalty_matrix,
    performance_profile,
    run_experiment,
    sigma_ladder,
    spearman,
    train,
    verify,
)

__all__ = [
    "Model",
    "compute_weights",
    "estimate_ldm_pool",
    "generate",
    "ldm_seeded_select",
    "paired_t_score",
    "penalty_matrix",
    "performance_profile",
    "run_experiment",
    "sigma_ladder",
    "spearman",
    "train",
    "verify",
]
