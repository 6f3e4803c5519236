"""EMD^2 losses for ordered-class training.

Thin wrapper over the C++ core: closed-form squared-EMD losses and their
gradients, the self-guided ground-distance pipeline, an exact transportation
simplex oracle, a Sinkhorn baseline, and a config-driven training runner.
"""

from ._emdloss import (
    InsufficientDataError,
    InvalidInputError,
    LossResult,
    NumericalError,
    ParseError,
    aem_aeo,
    config_template,
    cross_entropy,
    discretize_scores,
    emd2_ordered,
    emd_exact,
    emd_single_label,
    expected_score,
    generate_ordinal,
    hybrid_loss,
    learn_ground_matrix,
    ordinal_matrix,
    percentile_transform,
    predict_class,
    sdd,
    sinkhorn_emd,
    solve_transport,
    spearman_rho,
    symmetrize,
    train_run,
    __version__,
)

__all__ = [
    "InsufficientDataError",
    "InvalidInputError",
    "LossResult",
    "NumericalError",
    "ParseError",
    "aem_aeo",
    "config_template",
    "cross_entropy",
    "discretize_scores",
    "emd2_ordered",
    "emd_exact",
    "emd_single_label",
    "expected_score",
    "generate_ordinal",
    "hybrid_loss",
    "learn_ground_matrix",
    "ordinal_matrix",
    "percentile_transform",
    "predict_class",
    "sdd",
    "sinkhorn_emd",
    "solve_transport",
    "spearman_rho",
    "symmetrize",
    "train_run",
    "__version__",
]
