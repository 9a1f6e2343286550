"""CSV contracts of the pipeline: readers for inputs and every stage artifact.

Input readers validate row by row so a bad row can be reported with its
line number. In lenient mode bad rows are skipped and counted; in strict
mode the first one raises `MalformedRow`.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    Generic,
    Iterator,
    List,
    Mapping,
    NamedTuple,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np
import pandas as pd
from pydantic import ValidationError

from mobility_stress.dataset import FEATURE_NAMES, DayRecord, FoldSpec
from mobility_stress.evaluation import FeatureImportance, FoldReport, MetricSummary
from mobility_stress.exceptions import (
    FileMissing,
    HeaderMismatch,
    MalformedRow,
    UnknownChoice,
)
from mobility_stress.features import GPS_FEATURES, MobilityVector
from mobility_stress.geo import GeoPoint
from mobility_stress.labels import (
    DayLabel,
    StressClass,
    StressResponse,
    response_to_level,
)
from mobility_stress.nn import TrainHistory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")
UserDay = Tuple[str, dt.date]

GPS_HEADER = ["user_id", "timestamp", "lat", "lon"]
EMA_LEVEL_HEADER = ["user_id", "timestamp", "level"]
EMA_CHOICE_HEADER = ["user_id", "timestamp", "choice"]
# feature columns are positional: f1..f8 follow GPS_FEATURES, f9..f12 the
# calendar bits of FEATURE_NAMES
FEATURE_COLUMNS = [f"f{i}" for i in range(1, len(FEATURE_NAMES) + 1)]
GPS_COLUMNS = FEATURE_COLUMNS[: len(GPS_FEATURES)]
FEATURES_HEADER = ["user_id", "date", *GPS_COLUMNS]
LABELS_HEADER = ["user_id", "date", "daily_mean", "class"]
DATASET_HEADER = ["user_id", "date", *FEATURE_COLUMNS, "class"]
FOLDS_HEADER = ["record_index", "fold"]
REPORTS_HEADER = ["subset", "fold", "precision", "recall", "f1", "accuracy", "model"]
PER_CLASS_HEADER = [
    "subset",
    "model",
    "fold",
    "class",
    "precision",
    "recall",
    "f1",
    "support",
]
TRAINING_LOG_HEADER = ["epoch", "train_loss", "val_loss"]
IMPORTANCE_HEADER = ["feature", "f1_drop_mean", "f1_drop_std"]

FLOAT_FORMAT = "%.10g"
_OVERFLOW = "__overflow__"


class Parsed(Generic[T]):
    """Parsed rows plus the number of malformed rows skipped."""

    def __init__(self, data: T, skipped: int) -> None:
        self.data = data
        self.skipped = skipped


class _Row(NamedTuple):
    line: int
    fields: Dict[str, str]


def _require_file(path: Path) -> None:
    if not path.is_file():
        raise FileMissing(f"input file not found: {path}")


def _read_rows(
    path: PathLike, headers: Sequence[Sequence[str]]
) -> Tuple[List[str], Iterator[_Row], List[Tuple[int, str]]]:
    """Header of `path` and its rows keyed by column, with 1-based line numbers.

    Rows with a wrong field count are returned in the third element as
    (line, reason) instead of being yielded.
    """
    path = Path(path)
    _require_file(path)
    width = max(len(h) for h in headers)

    def keep_long(fields: List[str]) -> List[str]:
        return fields[:width] + [_OVERFLOW]

    try:
        frame = pd.read_csv(
            path,
            header=None,
            names=list(range(width + 1)),
            dtype=str,
            keep_default_na=False,
            na_values=[],
            skip_blank_lines=False,
            engine="python",
            on_bad_lines=keep_long,
        )
    except pd.errors.EmptyDataError:
        raise HeaderMismatch(f"{path}: file is empty, expected a header") from None

    # keep_default_na=False still leaves NaN where a line ran out of fields
    cells = [
        [None if pd.isna(c) else str(c) for c in raw]
        for raw in frame.itertuples(index=False, name=None)
    ]
    if not cells:
        raise HeaderMismatch(f"{path}: file is empty, expected a header")
    header = [c.strip() for c in cells[0] if c is not None and c != _OVERFLOW]
    if header not in [list(h) for h in headers]:
        expected = " or ".join(",".join(h) for h in headers)
        raise HeaderMismatch(f"{path}: header {','.join(header)!r} is not {expected!r}")

    bad: List[Tuple[int, str]] = []

    def rows() -> Iterator[_Row]:
        for index, raw in enumerate(cells[1:], start=2):
            present = [c for c in raw if c is not None]
            if not present or (len(present) == 1 and present[0].strip() == ""):
                continue
            if raw[width] is not None or any(c is None for c in raw[: len(header)]) or (
                len(header) < width and raw[len(header)] is not None
            ):
                bad.append((index, f"expected {len(header)} fields"))
                continue
            fields = {name: str(raw[i]).strip() for i, name in enumerate(header)}
            yield _Row(index, fields)

    return header, rows(), bad


def _parse_timestamp(text: str) -> int:
    """Integer epoch seconds; fractional seconds are truncated."""
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"timestamp is not finite: {text!r}") from None
        return int(math.floor(value))


def _collect(
    path: PathLike,
    headers: Sequence[Sequence[str]],
    convert: Callable[[List[str], Dict[str, str]], T],
    strict: bool,
) -> Parsed[List[T]]:
    header, rows, bad = _read_rows(path, headers)
    out: List[T] = []
    skipped: List[Tuple[int, str]] = []

    def reject(line: int, reason: str) -> None:
        if strict:
            raise MalformedRow(str(path), line, reason)
        skipped.append((line, reason))

    for row in rows:
        while bad and bad[0][0] < row.line:
            reject(*bad.pop(0))
        try:
            out.append(convert(header, row.fields))
        except (ValueError, ValidationError, UnknownChoice) as e:
            reason = _reason(e)
            reject(row.line, reason)
    for line, reason in bad:
        reject(line, reason)

    if skipped:
        first_line, first_reason = skipped[0]
        logger.warning(
            "%s: skipped %d malformed row(s); first at line %d: %s",
            path,
            len(skipped),
            first_line,
            first_reason,
        )
    return Parsed(out, len(skipped))


def _reason(e: Exception) -> str:
    if isinstance(e, ValidationError):
        return "; ".join(f"{err['loc'][0]}: {err['msg']}" for err in e.errors())
    return str(e)


def _gps_row(_: List[str], f: Dict[str, str]) -> Tuple[str, GeoPoint]:
    if not f["user_id"]:
        raise ValueError("empty user_id")
    return f["user_id"], GeoPoint(
        timestamp=_parse_timestamp(f["timestamp"]),
        lat=float(f["lat"]),
        lon=float(f["lon"]),
    )


def parse_gps_csv(
    path: PathLike, strict: bool = False
) -> Parsed[Dict[str, List[GeoPoint]]]:
    """Fixes grouped by user from a `user_id,timestamp,lat,lon` file."""
    parsed = _collect(path, [GPS_HEADER], _gps_row, strict)
    by_user: Dict[str, List[GeoPoint]] = {}
    for user_id, point in parsed.data:
        by_user.setdefault(user_id, []).append(point)
    logger.info("%s: %d fixes for %d users", path, len(parsed.data), len(by_user))
    return Parsed(by_user, parsed.skipped)


def _ema_row(header: List[str], f: Dict[str, str]) -> StressResponse:
    if not f["user_id"]:
        raise ValueError("empty user_id")
    if header[-1] == "choice":
        level = response_to_level(f["choice"])
    else:
        level = int(f["level"])
    return StressResponse(
        user_id=f["user_id"], timestamp=_parse_timestamp(f["timestamp"]), level=level
    )


def parse_ema_csv(path: PathLike, strict: bool = False) -> Parsed[List[StressResponse]]:
    """Responses from a `...,level` (1..5) or `...,choice` (answer text) file."""
    parsed = _collect(path, [EMA_LEVEL_HEADER, EMA_CHOICE_HEADER], _ema_row, strict)
    logger.info("%s: %d stress responses", path, len(parsed.data))
    return parsed


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _read(path: PathLike, header: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    _require_file(path)
    try:
        frame = pd.read_csv(path, dtype={"user_id": str})
    except pd.errors.EmptyDataError:
        raise HeaderMismatch(f"{path}: file is empty, expected a header") from None
    if list(frame.columns) != list(header):
        found, expected = ",".join(frame.columns), ",".join(header)
        raise HeaderMismatch(f"{path}: header {found!r} is not {expected!r}")
    return frame


def write_gps_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame[GPS_HEADER].to_csv(
        path, index=False, float_format="%.7f", lineterminator="\n"
    )
    return path


def write_features_csv(
    features: Mapping[UserDay, MobilityVector], path: PathLike
) -> Path:
    rows = [
        [user_id, date.isoformat(), *(getattr(v, name) for name in GPS_FEATURES)]
        for (user_id, date), v in sorted(features.items())
    ]
    frame = pd.DataFrame(rows, columns=FEATURES_HEADER)
    for name in ("tile_seq_diff", "cluster_seq_diff"):
        column = GPS_COLUMNS[GPS_FEATURES.index(name)]
        frame[column] = frame[column].astype("Int64")
    return write_table(frame, path)


def read_features_csv(path: PathLike) -> Dict[UserDay, MobilityVector]:
    frame = _read(path, FEATURES_HEADER)
    out: Dict[UserDay, MobilityVector] = {}
    for row in frame.to_dict("records"):
        values = {
            name: (None if isinstance(v, float) and math.isnan(v) else v)
            for name, v in zip(GPS_FEATURES, (row[c] for c in GPS_COLUMNS))
        }
        key = (str(row["user_id"]), dt.date.fromisoformat(str(row["date"])))
        out[key] = MobilityVector.model_validate(values)
    return out


def write_labels_csv(labels: Sequence[DayLabel], path: PathLike) -> Path:
    frame = pd.DataFrame(
        [
            (d.user_id, d.date.isoformat(), d.daily_mean, int(d.stress_class))
            for d in labels
        ],
        columns=LABELS_HEADER,
    )
    return write_table(frame, path)


def read_labels_csv(path: PathLike) -> List[DayLabel]:
    frame = _read(path, LABELS_HEADER)
    return [
        DayLabel(
            user_id=str(row["user_id"]),
            date=dt.date.fromisoformat(str(row["date"])),
            daily_mean=float(row["daily_mean"]),
            stress_class=StressClass(int(row["class"])),
        )
        for row in frame.to_dict("records")
    ]


def write_dataset_csv(records: Sequence[DayRecord], path: PathLike) -> Path:
    frame = pd.DataFrame(
        [(r.user_id, r.date.isoformat(), *r.features, int(r.label)) for r in records],
        columns=DATASET_HEADER,
    )
    for column in FEATURE_COLUMNS[len(GPS_FEATURES) :]:
        frame[column] = frame[column].astype(int)
    return write_table(frame, path)


def read_dataset_csv(path: PathLike) -> List[DayRecord]:
    frame = _read(path, DATASET_HEADER)
    return [
        DayRecord(
            user_id=str(row["user_id"]),
            date=dt.date.fromisoformat(str(row["date"])),
            features=tuple(float(row[c]) for c in FEATURE_COLUMNS),
            label=StressClass(int(row["class"])),
        )
        for row in frame.to_dict("records")
    ]


def write_folds_csv(
    records: Sequence[DayRecord], folds: FoldSpec, path: PathLike
) -> Path:
    frame = pd.DataFrame(
        {"record_index": np.arange(len(records)), "fold": folds.assignments},
        columns=FOLDS_HEADER,
    )
    return write_table(frame, path)


def read_folds_csv(path: PathLike, records: Sequence[DayRecord], seed: int) -> FoldSpec:
    """Fold assignments for `records`, which must be in dataset.csv row order."""
    frame = _read(path, FOLDS_HEADER)
    indices = frame["record_index"].astype(int).tolist()
    by_index = dict(zip(indices, frame["fold"].astype(int).tolist()))
    missing = [i for i in range(len(records)) if i not in by_index]
    if missing:
        raise HeaderMismatch(f"{path}: no fold assignment for record {missing[0]}")
    if len(by_index) != len(records):
        raise HeaderMismatch(
            f"{path}: assigns {len(by_index)} records, the dataset has {len(records)}"
        )
    assignments = tuple(by_index[i] for i in range(len(records)))
    return FoldSpec(k=max(assignments) + 1, assignments=assignments, seed=seed)


def write_reports_csv(
    groups: Sequence[Tuple[Sequence[FoldReport], Mapping[str, MetricSummary]]],
    path: PathLike,
) -> Path:
    """Fold rows followed by `mean` and `std` rows for each (subset, model) group."""
    rows: List[Dict[str, Any]] = []
    for reports, summary in groups:
        head = reports[0]
        for r in reports:
            rows.append(
                {
                    "subset": r.subset.value,
                    "fold": str(r.fold),
                    "precision": r.precision,
                    "recall": r.recall,
                    "f1": r.f1,
                    "accuracy": r.accuracy,
                    "model": r.model,
                }
            )
        for stat in ("mean", "std"):
            row: Dict[str, Any] = {
                "subset": head.subset.value,
                "fold": stat,
                "model": head.model,
            }
            row.update({name: getattr(m, stat) for name, m in summary.items()})
            rows.append(row)
    return write_table(pd.DataFrame(rows, columns=REPORTS_HEADER), path)


def read_reports_csv(path: PathLike) -> pd.DataFrame:
    frame = _read(path, REPORTS_HEADER)
    frame["fold"] = frame["fold"].astype(str)
    return frame


def write_per_class_csv(reports: Sequence[FoldReport], path: PathLike) -> Path:
    rows = [
        (r.subset.value, r.model, r.fold, m.label)
        + (m.precision, m.recall, m.f1, m.support)
        for r in reports
        for m in r.per_class
    ]
    return write_table(pd.DataFrame(rows, columns=PER_CLASS_HEADER), path)


def write_training_log(history: TrainHistory, path: PathLike) -> Path:
    epochs = np.arange(1, len(history.train_loss) + 1)
    frame = pd.DataFrame(
        {
            "epoch": epochs,
            "train_loss": history.train_loss,
            "val_loss": history.val_loss,
        },
        columns=TRAINING_LOG_HEADER,
    )
    return write_table(frame, path)


def read_training_log(path: PathLike) -> TrainHistory:
    """History from a log; the best epoch is the first lowest validation loss."""
    frame = _read(path, TRAINING_LOG_HEADER)
    val_loss = frame["val_loss"].astype(float)
    return TrainHistory(
        train_loss=frame["train_loss"].astype(float).tolist(),
        val_loss=val_loss.tolist(),
        best_epoch=int(frame["epoch"].iloc[val_loss.argmin()]) if len(frame) else 0,
        stopped_epoch=len(frame),
    )


def write_importance_csv(
    importances: Sequence[FeatureImportance], path: PathLike
) -> Path:
    rows = [i.model_dump() for i in importances]
    frame = pd.DataFrame(rows, columns=IMPORTANCE_HEADER)
    return write_table(frame, path)


def read_importance_csv(path: PathLike) -> List[FeatureImportance]:
    frame = _read(path, IMPORTANCE_HEADER)
    return [FeatureImportance.model_validate(row) for row in frame.to_dict("records")]

