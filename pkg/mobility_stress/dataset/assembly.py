"""Supervised day records: standardised GPS metrics plus temporal one-hots."""

from __future__ import annotations

import datetime as dt
import logging
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from mobility_stress.exceptions import DateOutOfTerm
from mobility_stress.features.mobility import GPS_FEATURES, MobilityVector
from mobility_stress.labels.stress import DayLabel, StressClass

logger = logging.getLogger(__name__)

TEMPORAL_FEATURES: Tuple[str, ...] = ("weekend", "term_start", "term_mid", "term_end")
FEATURE_NAMES: Tuple[str, ...] = GPS_FEATURES + TEMPORAL_FEATURES
N_FEATURES = len(FEATURE_NAMES)

# population std below this is treated as a constant column
ZERO_VARIANCE = 1e-12

UserDay = Tuple[str, dt.date]


class TermCalendar(BaseModel):
    model_config = ConfigDict(frozen=True)

    first_day: dt.date
    last_day: dt.date

    @model_validator(mode="after")
    def _check_order(self) -> "TermCalendar":
        if self.first_day > self.last_day:
            raise ValueError(
                f"first_day {self.first_day} is after last_day {self.last_day}"
            )
        return self

    @property
    def n_days(self) -> int:
        return (self.last_day - self.first_day).days + 1

    def contains(self, date: dt.date) -> bool:
        return self.first_day <= date <= self.last_day

    def third_sizes(self) -> Tuple[int, int, int]:
        """Day counts of the start, mid and end thirds; remainders go early."""
        base, rem = divmod(self.n_days, 3)
        sizes = [base + (1 if i < rem else 0) for i in range(3)]
        return sizes[0], sizes[1], sizes[2]

    def third(self, date: dt.date) -> int:
        """0, 1 or 2 for the start, mid or end third containing `date`."""
        if not self.contains(date):
            raise DateOutOfTerm(
                f"{date.isoformat()} is outside the term "
                f"{self.first_day.isoformat()}..{self.last_day.isoformat()}"
            )
        offset = (date - self.first_day).days
        start, mid, _ = self.third_sizes()
        if offset < start:
            return 0
        if offset < start + mid:
            return 1
        return 2


class DayRecord(BaseModel):
    """One supervised example, features in `FEATURE_NAMES` order."""

    model_config = ConfigDict(frozen=True)

    user_id: str
    date: dt.date
    features: Tuple[float, ...]
    label: StressClass

    @field_validator("features")
    @classmethod
    def _check_features(cls, features: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(features) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(features)}")
        if not all(np.isfinite(features)):
            raise ValueError("features must be finite")
        weekend, *thirds = features[len(GPS_FEATURES) :]
        if weekend not in (0.0, 1.0) or any(bit not in (0.0, 1.0) for bit in thirds):
            raise ValueError("temporal features must be 0/1 bits")
        if sum(thirds) != 1.0:
            raise ValueError("exactly one of the term-third bits must be set")
        return features


def temporal_onehots(date: dt.date, cal: TermCalendar) -> Tuple[int, int, int, int]:
    """[weekend, term start, term mid, term end] bits for `date`."""
    third = cal.third(date)
    weekend = 1 if date.weekday() >= 5 else 0
    return (weekend, int(third == 0), int(third == 1), int(third == 2))


def zscore_columns(values: np.ndarray) -> np.ndarray:
    """Column-wise z-scores with population std; NaNs become column means first.

    Constant (or entirely missing) columns map to 0.
    """
    values = np.array(values, dtype=np.float64, copy=True)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {values.shape}")
    out = np.zeros_like(values)
    for col in range(values.shape[1]):
        column = values[:, col]
        present = ~np.isnan(column)
        if not present.any():
            continue
        column[~present] = column[present].mean()
        std = column.std()
        if std > ZERO_VARIANCE:
            out[:, col] = (column - column.mean()) / std
    return out


def standardize_per_user(
    rows: Mapping[UserDay, MobilityVector],
) -> Dict[UserDay, np.ndarray]:
    """Z-score each GPS metric within each user.

    Missing sequence differences are imputed with the user's mean of the
    present values before scaling, so they standardise to 0.
    """
    by_user: Dict[str, List[UserDay]] = {}
    for key in rows:
        by_user.setdefault(key[0], []).append(key)
    out: Dict[UserDay, np.ndarray] = {}
    for user_id in sorted(by_user):
        keys = sorted(by_user[user_id])
        matrix = np.vstack([rows[key].as_array() for key in keys])
        scaled = zscore_columns(matrix)
        for key, row in zip(keys, scaled):
            out[key] = row
    return out


def assemble(
    features: Mapping[UserDay, np.ndarray],
    labels: Iterable[DayLabel],
    cal: TermCalendar,
) -> List[DayRecord]:
    """Inner-join standardised features with day labels.

    Labeled days without GPS features and days outside the term are dropped
    and counted. Records come back sorted by (user_id, date).
    """
    records: List[DayRecord] = []
    no_gps = 0
    out_of_term = 0
    for label in labels:
        key = (label.user_id, label.date)
        if key not in features:
            no_gps += 1
            continue
        if not cal.contains(label.date):
            out_of_term += 1
            continue
        gps = tuple(float(v) for v in features[key])
        records.append(
            DayRecord(
                user_id=label.user_id,
                date=label.date,
                features=gps + tuple(map(float, temporal_onehots(label.date, cal))),
                label=label.stress_class,
            )
        )
    records.sort(key=lambda r: (r.user_id, r.date))
    if no_gps:
        logger.info("dropped %d labeled user-days without GPS fixes", no_gps)
    if out_of_term:
        logger.warning("dropped %d labeled user-days outside the term", out_of_term)
    logger.info("assembled %d records", len(records))
    return records


def records_to_arrays(
    records: Sequence[DayRecord], feature_indices: Sequence[int] | None = None
) -> Tuple[np.ndarray, np.ndarray]:
    """(n, d) float64 feature matrix and (n,) int label vector."""
    if not records:
        width = N_FEATURES if feature_indices is None else len(feature_indices)
        return np.zeros((0, width)), np.zeros(0, dtype=np.int64)
    x = np.array([r.features for r in records], dtype=np.float64)
    if feature_indices is not None:
        x = x[:, list(feature_indices)]
    y = np.array([int(r.label) for r in records], dtype=np.int64)
    return x, y
