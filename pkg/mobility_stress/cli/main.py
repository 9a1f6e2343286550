"""`mobility-stress` command line.

Exit codes: 0 success, 2 usage error, 3 input error, 4 pipeline error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mobility_stress.cli import io
from mobility_stress.cli.config import PipelineConfig, load_config
from mobility_stress.cli.pipeline import (
    SUBSET_ORDER,
    assemble_dataset,
    evaluate_subsets,
    extract_features,
    fold_importance,
    make_folds,
    render_summary,
    run_pipeline,
    stage,
    write_evaluation,
)
from mobility_stress.dataset import DayRecord, FoldSpec
from mobility_stress.evaluation import (
    FeatureSubset,
    fold_report,
    permutation_importance,
    summarize,
)
from mobility_stress.exceptions import (
    ConfigInvalid,
    FileMissing,
    HeaderMismatch,
    MalformedRow,
    MobilityStressError,
    PipelineStageError,
)
from mobility_stress.labels import label_days
from mobility_stress.nn import (
    Network,
    default_architecture,
    grad_check,
    load_network,
    predict,
)
from mobility_stress.synth import SignalSpec, generate, load_cohort_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_PIPELINE = 4

INPUT_ERRORS = (FileMissing, HeaderMismatch, MalformedRow, ConfigInvalid)
GRAD_CHECK_TOLERANCE = 1e-4

SIGNALS = {
    "planted": SignalSpec(),
    "null": SignalSpec(weekend=0.0, entropy=0.0, distance=0.0),
    "weekend": SignalSpec(weekend=1.0, entropy=0.0, distance=0.0),
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value configuration file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument(
        "--strict", action="store_true", help="fail on the first malformed input row"
    )
    common.add_argument(
        "--subset",
        choices=[s.value for s in FeatureSubset],
        help="feature subset whose models and training logs are written",
    )
    common.add_argument("--k-folds", type=int, dest="k_folds")
    common.add_argument("--max-epochs", type=int, dest="max_epochs")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument(
        "--emit-svg", action="store_true", help="also render SVG figures"
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="mobility-stress",
        description="Predict per-user stress classes from smartphone GPS mobility.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, text: str) -> argparse.ArgumentParser:
        return commands.add_parser(name, parents=[common], help=text)

    synth = command("synth", "generate a synthetic cohort")
    synth.add_argument("--users", type=int, default=20)
    synth.add_argument("--days", type=int, default=60)
    synth.add_argument("--signal", choices=sorted(SIGNALS), default="planted")
    synth.add_argument("--noise", type=float, default=0.5)
    synth.add_argument("--ema-format", choices=["level", "choice"], default="level")

    extract = command("extract", "GPS fixes to features.csv")
    extract.add_argument("--gps", type=Path, required=True)

    label = command("label", "EMA responses to labels.csv")
    label.add_argument("--ema", type=Path, required=True)

    assemble = command("assemble", "join features and labels")
    assemble.add_argument("--features", type=Path, required=True)
    assemble.add_argument("--labels", type=Path, required=True)

    train = command("train", "cross-validate one subset")
    train.add_argument("--dataset", type=Path, required=True)
    train.add_argument(
        "--folds", type=Path, help="reuse a folds.csv instead of drawing folds"
    )

    evaluate = command("evaluate", "compare feature subsets")
    evaluate.add_argument("--dataset", type=Path, required=True)
    evaluate.add_argument("--folds", type=Path)
    evaluate.add_argument(
        "--model", type=Path, help="score a saved model on the whole dataset"
    )
    evaluate.add_argument(
        "--importance", action="store_true", help="write importance.csv"
    )

    run_all = command("run-all", "every stage end to end")
    run_all.add_argument("--gps", type=Path, required=True)
    run_all.add_argument("--ema", type=Path, required=True)
    run_all.add_argument("--importance", action="store_true")

    check = command("grad-check", "verify backpropagation")
    check.add_argument("--batch-size", type=int, default=16)
    check.add_argument("--step", type=float, default=1e-5)
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    return load_config(
        args.config,
        {
            "seed": args.seed,
            "subset": args.subset,
            "strict": True if args.strict else None,
            "k_folds": args.k_folds,
            "max_epochs": args.max_epochs,
        },
    )


def _write_stdout(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_synth(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    cohort_cfg = load_cohort_config(
        {
            "n_users": args.users,
            "n_days": args.days,
            "first_day": cfg.term_first_day,
            "utc_offset_hours": cfg.utc_offset_hours,
            "signal": SIGNALS[args.signal],
            "noise": args.noise,
            "ema_format": args.ema_format,
            "seed": cfg.seed,
        }
    )
    cohort = generate(cohort_cfg)
    io.write_gps_csv(cohort.gps, args.out / "gps.csv")
    io.write_table(cohort.ema, args.out / "ema.csv")
    io.write_table(cohort.ground_truth, args.out / "ground_truth.csv")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    points = io.parse_gps_csv(args.gps, strict=cfg.strict).data
    io.write_features_csv(extract_features(points, cfg), args.out / "features.csv")
    return EXIT_OK


def cmd_label(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    responses = io.parse_ema_csv(args.ema, strict=cfg.strict).data
    labels = label_days(responses, cfg.utc_offset_hours, cfg.min_days_per_user)
    io.write_labels_csv(labels, args.out / "labels.csv")
    return EXIT_OK


def cmd_assemble(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    features = io.read_features_csv(args.features)
    labels = io.read_labels_csv(args.labels)
    records = assemble_dataset(features, labels, cfg)
    io.write_dataset_csv(records, args.out / "dataset.csv")
    return EXIT_OK


def _records_and_folds(
    args: argparse.Namespace, cfg: PipelineConfig
) -> Tuple[List[DayRecord], FoldSpec]:
    records = io.read_dataset_csv(args.dataset)
    if args.folds is not None:
        folds = io.read_folds_csv(args.folds, records, cfg.seed)
    else:
        folds = make_folds(records, cfg)
        io.write_folds_csv(records, folds, args.out / "folds.csv")
    return records, folds


def cmd_train(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    records, folds = _records_and_folds(args, cfg)
    results = evaluate_subsets(records, folds, cfg, [cfg.subset])
    write_evaluation(args.out, results, cfg, emit_svg=args.emit_svg)
    _write_stdout(render_summary(None, results, cfg))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    if args.model is not None:
        return _evaluate_saved_model(args, cfg)
    records, folds = _records_and_folds(args, cfg)
    results = evaluate_subsets(records, folds, cfg, SUBSET_ORDER)
    write_evaluation(args.out, results, cfg, emit_svg=args.emit_svg)
    if args.importance:
        io.write_importance_csv(
            fold_importance(results[cfg.subset], records, folds, cfg),
            args.out / "importance.csv",
        )
    summary = render_summary(None, results, cfg)
    (args.out / "summary.txt").write_text(summary)
    _write_stdout(summary)
    return EXIT_OK


def _evaluate_saved_model(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    records = io.read_dataset_csv(args.dataset)
    net = load_network(args.model)
    indices = cfg.subset.indices
    if net.in_dim != len(indices):
        raise ConfigInvalid(
            f"model takes {net.in_dim} inputs "
            f"but subset '{cfg.subset.value}' has {len(indices)}"
        )
    x = np.array([[r.features[i] for i in indices] for r in records], dtype=np.float64)
    y = np.array([int(r.label) for r in records], dtype=np.int64)
    report = fold_report(0, cfg.subset, y, predict(net, x))
    io.write_reports_csv([([report], summarize([report]))], args.out / "reports.csv")
    if args.importance:
        io.write_importance_csv(
            permutation_importance(
                net, records, indices, cfg.importance_repeats, cfg.seed
            ),
            args.out / "importance.csv",
        )
    _write_stdout(
        f"{cfg.subset.value}: F1 {report.f1:.4f}  "
        f"precision {report.precision:.4f}  recall {report.recall:.4f}"
    )
    return EXIT_OK


def cmd_run_all(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    result = run_pipeline(
        cfg,
        args.gps,
        args.ema,
        args.out,
        emit_svg=args.emit_svg,
        importance=args.importance,
    )
    _write_stdout((result.out_dir / "summary.txt").read_text())
    return EXIT_OK


def cmd_grad_check(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    layers = default_architecture(cfg.hidden_sizes, cfg.dropout_rates)
    n_inputs = len(cfg.subset.indices)
    net = Network(n_inputs, layers, seed=cfg.seed)
    x = rng.normal(size=(args.batch_size, n_inputs))
    y = rng.integers(0, net.n_classes, size=args.batch_size)
    error = grad_check(net, x, y, args.step, seed=cfg.seed)
    _write_stdout(f"max relative gradient error: {error:.3e}")
    return EXIT_OK if error <= GRAD_CHECK_TOLERANCE else EXIT_PIPELINE


COMMANDS: Dict[str, Callable[[argparse.Namespace, PipelineConfig], int]] = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "label": cmd_label,
    "assemble": cmd_assemble,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "run-all": cmd_run_all,
    "grad-check": cmd_grad_check,
}


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args)

    try:
        cfg = _config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        with stage(args.command):
            return COMMANDS[args.command](args, cfg)
    except MobilityStressError as e:
        cause = e.cause if isinstance(e, PipelineStageError) else e
        if args.verbose:
            logger.exception("command failed")
        sys.stderr.write(f"mobility-stress: error: {e}\n")
        return EXIT_INPUT if isinstance(cause, INPUT_ERRORS) else EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
