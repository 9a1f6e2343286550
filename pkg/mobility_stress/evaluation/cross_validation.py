"""Stratified k-fold evaluation of the network against the mode baseline."""

from __future__ import annotations

import logging
from enum import Enum
from typing import Dict, List, Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from mobility_stress.dataset import (
    FEATURE_NAMES,
    DayRecord,
    FoldSpec,
    records_to_arrays,
)
from mobility_stress.dataset.splits import stratified_holdout_indices
from mobility_stress.evaluation.metrics import (
    N_CLASSES,
    ClassMetrics,
    ConfusionMatrix,
    mode_baseline,
    per_class_prf,
    weighted_prf,
)
from mobility_stress.nn import (
    Network,
    TrainConfig,
    TrainHistory,
    default_architecture,
    predict,
    train,
)

logger = logging.getLogger(__name__)

METRICS = ("precision", "recall", "f1", "accuracy")


class FeatureSubset(str, Enum):
    GPS = "gps"
    TEMPORAL = "temporal"
    ALL = "all"

    @property
    def indices(self) -> Tuple[int, ...]:
        """Zero-based columns of the 12-wide feature vector."""
        if self is FeatureSubset.GPS:
            return tuple(range(0, 8))
        if self is FeatureSubset.TEMPORAL:
            return tuple(range(8, 12))
        return tuple(range(12))

    @property
    def feature_names(self) -> Tuple[str, ...]:
        return tuple(FEATURE_NAMES[i] for i in self.indices)


class ModelConfig(BaseModel):
    """Network shape and the validation share carved out of each training fold."""

    model_config = ConfigDict(frozen=True)

    hidden_sizes: Tuple[int, ...] = (57, 35, 35)
    dropout_rates: Tuple[float, ...] = (0.35, 0.25, 0.15)
    bn_momentum: float = Field(default=0.9, gt=0, lt=1)
    bn_eps: float = Field(default=1e-5, gt=0)
    val_fraction: float = Field(default=0.15, gt=0, lt=0.5)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @model_validator(mode="after")
    def _check_layers(self) -> "ModelConfig":
        if len(self.hidden_sizes) != len(self.dropout_rates):
            raise ValueError("hidden_sizes and dropout_rates must have the same length")
        if any(size < 1 for size in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be positive")
        if any(not 0 <= rate < 1 for rate in self.dropout_rates):
            raise ValueError("dropout rates must lie in [0, 1)")
        return self


class FoldReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    fold: int
    subset: FeatureSubset
    model: Literal["network", "mode_baseline"] = "network"
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    f1: float = Field(ge=0, le=1)
    accuracy: float = Field(ge=0, le=1)
    confusion: List[List[int]]
    per_class: List[ClassMetrics]

    def metric(self, name: str) -> float:
        return float(getattr(self, name))


def fold_report(
    fold: int,
    subset: FeatureSubset,
    y_true: Sequence[int],
    y_pred: Sequence[int],
    model: Literal["network", "mode_baseline"] = "network",
) -> FoldReport:
    cm = ConfusionMatrix.from_predictions(y_true, y_pred, N_CLASSES)
    precision, recall, f1 = weighted_prf(cm)
    return FoldReport(
        fold=fold,
        subset=subset,
        model=model,
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=cm.accuracy(),
        confusion=cm.to_list(),
        per_class=per_class_prf(cm),
    )


class MetricSummary(BaseModel):
    """Unweighted mean and population std across folds."""

    mean: float
    std: float


def summarize(reports: Sequence[FoldReport]) -> Dict[str, MetricSummary]:
    if not reports:
        raise ValueError("cannot summarize zero fold reports")
    out = {}
    for name in METRICS:
        values = np.array([r.metric(name) for r in reports])
        out[name] = MetricSummary(mean=float(values.mean()), std=float(values.std()))
    return out


class CrossValidationResult:
    """Fold reports of the network and the baseline, ordered by fold."""

    def __init__(
        self,
        subset: FeatureSubset,
        reports: List[FoldReport],
        baseline_reports: List[FoldReport],
        histories: List[TrainHistory],
        networks: List[Network],
    ) -> None:
        self.subset = subset
        self.reports = reports
        self.baseline_reports = baseline_reports
        self.histories = histories
        self.networks = networks

    def summary(self) -> Dict[str, MetricSummary]:
        return summarize(self.reports)

    def baseline_summary(self) -> Dict[str, MetricSummary]:
        return summarize(self.baseline_reports)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent, reproducible child seed for a (seed, keys...) path."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def cross_validate(
    records: Sequence[DayRecord],
    folds: FoldSpec,
    subset: FeatureSubset | str = FeatureSubset.ALL,
    cfg: ModelConfig | None = None,
) -> CrossValidationResult:
    """Train one network per fold on the subset's columns and score it.

    Each training fold is split again by a stratified holdout into the data
    the optimiser sees and the validation data early stopping watches. The
    mode baseline is fitted on the whole training fold.
    """
    subset = FeatureSubset(subset)
    cfg = cfg or ModelConfig()
    if len(folds.assignments) != len(records):
        raise ValueError(
            f"fold spec covers {len(folds.assignments)} records, "
            f"dataset has {len(records)}"
        )
    x, y = records_to_arrays(records, subset.indices)
    reports: List[FoldReport] = []
    baseline_reports: List[FoldReport] = []
    histories: List[TrainHistory] = []
    networks: List[Network] = []

    for fold in range(folds.k):
        train_idx = folds.train_indices(fold)
        test_idx = folds.test_indices(fold)
        fit_rel, val_rel = stratified_holdout_indices(
            y[train_idx], cfg.val_fraction, derive_seed(folds.seed, fold, 0)
        )
        fit_idx, val_idx = train_idx[fit_rel], train_idx[val_rel]

        net = Network(
            len(subset.indices),
            default_architecture(cfg.hidden_sizes, cfg.dropout_rates, N_CLASSES),
            seed=derive_seed(folds.seed, fold, 1),
            bn_momentum=cfg.bn_momentum,
            bn_eps=cfg.bn_eps,
        )
        fold_seed = derive_seed(cfg.train.seed, fold, 2)
        train_cfg = cfg.train.model_copy(update={"seed": fold_seed})
        net, history = train(
            net, (x[fit_idx], y[fit_idx]), (x[val_idx], y[val_idx]), train_cfg
        )

        report = fold_report(fold, subset, y[test_idx], predict(net, x[test_idx]))
        baseline = mode_baseline(y[train_idx])
        baseline_report = fold_report(
            fold,
            subset,
            y[test_idx],
            baseline.predict(len(test_idx)),
            model="mode_baseline",
        )
        logger.info(
            "fold %d/%d [%s]: F1 %.3f (baseline %.3f)",
            fold + 1,
            folds.k,
            subset.value,
            report.f1,
            baseline_report.f1,
        )
        reports.append(report)
        baseline_reports.append(baseline_report)
        histories.append(history)
        networks.append(net)

    return CrossValidationResult(subset, reports, baseline_reports, histories, networks)


class FeatureImportance(BaseModel):
    feature: str
    f1_drop_mean: float
    f1_drop_std: float


def permutation_importance(
    network: Network,
    records: Sequence[DayRecord],
    feature_indices: Sequence[int],
    repeats: int = 10,
    seed: int = 0,
) -> List[FeatureImportance]:
    """Weighted-F1 drop when one input column is shuffled, per column.

    `feature_indices` selects the record columns the network was trained on,
    in its input order.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, got: {repeats}")
    if len(feature_indices) != network.in_dim:
        raise ValueError(
            f"network takes {network.in_dim} inputs, "
            f"got {len(feature_indices)} feature indices"
        )
    x, y = records_to_arrays(records, feature_indices)
    reference_cm = ConfusionMatrix.from_predictions(y, predict(network, x))
    _, _, reference = weighted_prf(reference_cm)
    rng = np.random.default_rng(seed)

    importances = []
    for col, feature in enumerate(feature_indices):
        drops = np.empty(repeats)
        for r in range(repeats):
            shuffled = x.copy()
            shuffled[:, col] = rng.permutation(shuffled[:, col])
            cm = ConfusionMatrix.from_predictions(y, predict(network, shuffled))
            drops[r] = reference - weighted_prf(cm)[2]
        importances.append(
            FeatureImportance(
                feature=FEATURE_NAMES[feature],
                f1_drop_mean=float(drops.mean()),
                f1_drop_std=float(drops.std()),
            )
        )
    return importances
