from .cross_validation import (
    METRICS,
    CrossValidationResult,
    FeatureImportance,
    FeatureSubset,
    FoldReport,
    MetricSummary,
    ModelConfig,
    cross_validate,
    derive_seed,
    fold_report,
    permutation_importance,
    summarize,
)
from .metrics import (
    N_CLASSES,
    ClassMetrics,
    ConfusionMatrix,
    ModeClassifier,
    mode_baseline,
    per_class_prf,
    weighted_prf,
)

__all__ = [
    "METRICS",
    "N_CLASSES",
    "ClassMetrics",
    "ConfusionMatrix",
    "CrossValidationResult",
    "FeatureImportance",
    "FeatureSubset",
    "FoldReport",
    "MetricSummary",
    "ModeClassifier",
    "ModelConfig",
    "cross_validate",
    "derive_seed",
    "fold_report",
    "mode_baseline",
    "per_class_prf",
    "permutation_importance",
    "summarize",
    "weighted_prf",
]
