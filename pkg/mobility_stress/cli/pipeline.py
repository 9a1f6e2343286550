"""End-to-end pipeline: ingest, extract, label, assemble, split, evaluate, report."""

from __future__ import annotations

import datetime as dt
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel

from mobility_stress.cli import io
from mobility_stress.cli.config import PipelineConfig, dump_config
from mobility_stress.dataset import (
    DayRecord,
    FoldSpec,
    assemble,
    standardize_per_user,
    stratified_kfold,
)
from mobility_stress.evaluation import (
    METRICS,
    CrossValidationResult,
    FeatureImportance,
    FeatureSubset,
    MetricSummary,
    cross_validate,
    derive_seed,
    permutation_importance,
)
from mobility_stress.exceptions import (
    EmptyDataset,
    MobilityStressError,
    PipelineStageError,
)
from mobility_stress.features import MobilityVector, extract_user_features
from mobility_stress.geo import GeoPoint
from mobility_stress.labels import (
    DayLabel,
    StressClass,
    StressResponse,
    daily_average,
    label_days,
)
from mobility_stress.nn import save_network

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
UserDay = Tuple[str, dt.date]

SUBSET_ORDER = (FeatureSubset.GPS, FeatureSubset.TEMPORAL, FeatureSubset.ALL)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Re-raise package and argument errors as `PipelineStageError(name, ...)`."""
    logger.info("stage: %s", name)
    try:
        yield
    except PipelineStageError:
        raise
    except (MobilityStressError, ValueError) as e:
        raise PipelineStageError(name, e) from e


class CohortStats(BaseModel):
    users: int = 0
    responses: int = 0
    responses_per_user_min: int = 0
    responses_per_user_max: int = 0
    labeled_days: int = 0
    days_without_gps: int = 0
    days_outside_term: int = 0
    excluded_users: int = 0
    records: int = 0
    class_shares: Dict[str, float] = {}


def extract_features(
    points_by_user: Mapping[str, Sequence[GeoPoint]], cfg: PipelineConfig
) -> Dict[UserDay, MobilityVector]:
    metric_cfg = cfg.metric_settings()
    features: Dict[UserDay, MobilityVector] = {}
    for user_id in sorted(points_by_user):
        per_day = extract_user_features(
            user_id, points_by_user[user_id], metric_cfg, cfg.utc_offset_hours
        )
        features.update({(user_id, date): vector for date, vector in per_day.items()})
    logger.info("computed features for %d user-days", len(features))
    return features


def assemble_dataset(
    features: Mapping[UserDay, MobilityVector],
    labels: Sequence[DayLabel],
    cfg: PipelineConfig,
) -> List[DayRecord]:
    """Standardise per user and join with labels.

    Raises:
        EmptyDataset: if no labeled day has GPS features inside the term.
    """
    records = assemble(standardize_per_user(features), labels, cfg.term_calendar())
    if not records:
        raise EmptyDataset(
            f"no labeled user-day has GPS features inside the term "
            f"({len(labels)} labeled days, {len(features)} days with GPS)"
        )
    return records


def cohort_stats(
    points_by_user: Mapping[str, Sequence[GeoPoint]],
    responses: Sequence[StressResponse],
    features: Mapping[UserDay, MobilityVector],
    labels: Sequence[DayLabel],
    records: Sequence[DayRecord],
    cfg: PipelineConfig,
) -> CohortStats:
    per_user: Dict[str, int] = {}
    for r in responses:
        per_user[r.user_id] = per_user.get(r.user_id, 0) + 1
    days_per_user: Dict[str, int] = {}
    for user_id, _ in daily_average(responses, cfg.utc_offset_hours):
        days_per_user[user_id] = days_per_user.get(user_id, 0) + 1
    cal = cfg.term_calendar()
    counts = np.bincount([int(r.label) for r in records], minlength=len(StressClass))
    return CohortStats(
        users=len(set(points_by_user) | set(per_user)),
        responses=len(responses),
        responses_per_user_min=min(per_user.values(), default=0),
        responses_per_user_max=max(per_user.values(), default=0),
        labeled_days=len(labels),
        days_without_gps=sum((d.user_id, d.date) not in features for d in labels),
        days_outside_term=sum(
            (d.user_id, d.date) in features and not cal.contains(d.date) for d in labels
        ),
        excluded_users=sum(n < cfg.min_days_per_user for n in days_per_user.values()),
        records=len(records),
        class_shares={
            c.name.lower(): float(counts[c] / max(len(records), 1)) for c in StressClass
        },
    )


def make_folds(records: Sequence[DayRecord], cfg: PipelineConfig) -> FoldSpec:
    return stratified_kfold(records, cfg.k_folds, cfg.seed)


def evaluate_subsets(
    records: Sequence[DayRecord],
    folds: FoldSpec,
    cfg: PipelineConfig,
    subsets: Sequence[FeatureSubset] = SUBSET_ORDER,
) -> Dict[FeatureSubset, CrossValidationResult]:
    model_cfg = cfg.network_settings()
    return {
        subset: cross_validate(records, folds, subset, model_cfg) for subset in subsets
    }


def fold_importance(
    result: CrossValidationResult,
    records: Sequence[DayRecord],
    folds: FoldSpec,
    cfg: PipelineConfig,
) -> List[FeatureImportance]:
    """Permutation importance on each held-out fold, averaged over folds.

    The reported std is the spread of the per-fold mean drops.
    """
    per_fold: List[List[FeatureImportance]] = []
    for fold, net in enumerate(result.networks):
        test = [records[i] for i in folds.test_indices(fold)]
        per_fold.append(
            permutation_importance(
                net,
                test,
                result.subset.indices,
                cfg.importance_repeats,
                derive_seed(cfg.seed, fold, 3),
            )
        )
    out = []
    for col, name in enumerate(result.subset.feature_names):
        drops = np.array([fold[col].f1_drop_mean for fold in per_fold])
        out.append(
            FeatureImportance(
                feature=name,
                f1_drop_mean=float(drops.mean()),
                f1_drop_std=float(drops.std()),
            )
        )
    return out


def write_evaluation(
    out_dir: Path,
    results: Mapping[FeatureSubset, CrossValidationResult],
    cfg: PipelineConfig,
    *,
    emit_svg: bool = False,
) -> None:
    """reports.csv and per_class.csv for every subset.

    Models and training logs are written for `cfg.subset` only.
    """
    groups = []
    per_class = []
    for result in results.values():
        groups.append((result.reports, result.summary()))
        groups.append((result.baseline_reports, result.baseline_summary()))
        per_class.extend(result.reports)
        per_class.extend(result.baseline_reports)
    io.write_reports_csv(groups, out_dir / "reports.csv")
    io.write_per_class_csv(per_class, out_dir / "per_class.csv")

    chosen = results.get(cfg.subset)
    if chosen is not None:
        for fold, (net, history) in enumerate(zip(chosen.networks, chosen.histories)):
            io.write_training_log(history, out_dir / f"training_log_fold{fold}.csv")
            save_network(net, out_dir / f"model_fold{fold}.bin")

    if emit_svg:
        from mobility_stress.cli import plots

        any_result = next(iter(results.values()))
        plots.render_subset_comparison(
            {s.value: r.summary() for s, r in results.items()},
            any_result.baseline_summary(),
            out_dir / "subsets.svg",
        )
        if chosen is not None:
            for fold, history in enumerate(chosen.histories):
                plots.render_training_curve(
                    history,
                    out_dir / f"training_curve_fold{fold}.svg",
                    title=f"fold {fold}",
                )


def _format_summary(summary: Mapping[str, MetricSummary]) -> str:
    return "  ".join(f"{summary[m].mean:.4f} ± {summary[m].std:.4f}" for m in METRICS)


def render_summary(
    stats: Optional[CohortStats],
    results: Mapping[FeatureSubset, CrossValidationResult],
    cfg: PipelineConfig,
) -> str:
    lines = ["mobility-stress summary", f"seed: {cfg.seed}", f"folds: {cfg.k_folds}"]
    if stats is not None:
        lines += [
            f"users: {stats.users}",
            f"responses: {stats.responses}",
            f"responses per user: min {stats.responses_per_user_min}, "
            f"max {stats.responses_per_user_max}",
            f"labeled user-days: {stats.labeled_days}",
            f"user-days dropped without GPS: {stats.days_without_gps}",
            f"user-days dropped outside the term: {stats.days_outside_term}",
            f"users excluded (fewer than {cfg.min_days_per_user} labeled days): "
            f"{stats.excluded_users}",
            f"records: {stats.records}",
            "class shares: "
            + ", ".join(f"{k} {v:.3f}" for k, v in stats.class_shares.items()),
        ]
    columns = "  ".join(f"{m:<17}" for m in METRICS).rstrip()
    lines += ["", f"{'subset':<10}{'model':<15}" + columns]
    for subset, result in results.items():
        row = f"{subset.value:<10}{'network':<15}"
        lines.append(row + _format_summary(result.summary()))
    baseline = next(iter(results.values())).baseline_summary()
    lines.append(f"{'-':<10}{'mode_baseline':<15}" + _format_summary(baseline))
    return "\n".join(lines) + "\n"


class PipelineResult:
    def __init__(
        self,
        out_dir: Path,
        records: List[DayRecord],
        folds: FoldSpec,
        results: Dict[FeatureSubset, CrossValidationResult],
        stats: CohortStats,
    ) -> None:
        self.out_dir = out_dir
        self.records = records
        self.folds = folds
        self.results = results
        self.stats = stats


def run_pipeline(
    cfg: PipelineConfig,
    gps_path: PathLike,
    ema_path: PathLike,
    out_dir: PathLike,
    *,
    emit_svg: bool = False,
    importance: bool = False,
) -> PipelineResult:
    """Run every stage and write all artifacts into `out_dir`.

    Raises:
        PipelineStageError: naming the stage that failed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.env").write_text(dump_config(cfg))

    with stage("ingest"):
        points = io.parse_gps_csv(gps_path, strict=cfg.strict).data
        responses = io.parse_ema_csv(ema_path, strict=cfg.strict).data
    with stage("extract"):
        features = extract_features(points, cfg)
        io.write_features_csv(features, out / "features.csv")
    with stage("label"):
        labels = label_days(responses, cfg.utc_offset_hours, cfg.min_days_per_user)
        io.write_labels_csv(labels, out / "labels.csv")
    with stage("assemble"):
        records = assemble_dataset(features, labels, cfg)
        io.write_dataset_csv(records, out / "dataset.csv")
    with stage("split"):
        folds = make_folds(records, cfg)
        io.write_folds_csv(records, folds, out / "folds.csv")
    with stage("evaluate"):
        results = evaluate_subsets(records, folds, cfg)
        if importance:
            io.write_importance_csv(
                fold_importance(results[cfg.subset], records, folds, cfg),
                out / "importance.csv",
            )
    with stage("report"):
        write_evaluation(out, results, cfg, emit_svg=emit_svg)
        stats = cohort_stats(points, responses, features, labels, records, cfg)
        (out / "summary.txt").write_text(render_summary(stats, results, cfg))

    model = results[cfg.subset].summary()["f1"].mean
    baseline = results[cfg.subset].baseline_summary()["f1"].mean
    logger.info(
        "done: %s F1 %.3f vs mode baseline %.3f", cfg.subset.value, model, baseline
    )
    return PipelineResult(out, records, folds, results, stats)
