"""Class-stratified cross-validation folds and validation holdouts."""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mobility_stress.dataset.assembly import DayRecord
from mobility_stress.exceptions import ClassTooSmall

logger = logging.getLogger(__name__)

T = TypeVar("T")


class FoldSpec(BaseModel):
    """`assignments[i]` is the fold holding record `i` out."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=2)
    assignments: Tuple[int, ...]
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) != fold)


def _labels_of(records: Sequence[DayRecord] | Sequence[int]) -> np.ndarray:
    return np.array([int(getattr(r, "label", r)) for r in records], dtype=np.int64)


def stratified_kfold(
    records: Sequence[DayRecord] | Sequence[int], k: int, seed: int
) -> FoldSpec:
    """Shuffle each class, then deal its records round-robin over the folds.

    Dealing continues from the fold where the previous class stopped, so fold
    sizes stay within one of each other as well.

    Raises:
        ClassTooSmall: if a class present in `records` has fewer than `k` members.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got: {k}")
    labels = _labels_of(records)
    rng = np.random.default_rng(seed)
    assignments = np.full(len(labels), -1, dtype=np.int64)
    cursor = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ClassTooSmall(
                f"class {int(cls)} has {len(members)} records, fewer than k={k}"
            )
        for idx in rng.permutation(members):
            assignments[idx] = cursor % k
            cursor += 1
    return FoldSpec(k=k, assignments=tuple(int(a) for a in assignments), seed=seed)


def stratified_holdout_indices(
    labels: Sequence[int] | np.ndarray, frac: float, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted (fit, val) index arrays with round(frac * n_c) of each class in val."""
    if not 0 < frac < 0.5:
        raise ValueError(f"frac must be in (0, 0.5), got: {frac}")
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    val: List[int] = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise ClassTooSmall(
                f"class {int(cls)} has {len(members)} record(s); "
                "a holdout needs at least 2"
            )
        n_val = int(np.floor(frac * len(members) + 0.5))
        n_val = min(max(n_val, 1), len(members) - 1)
        val.extend(int(i) for i in rng.permutation(members)[:n_val])
    val_idx = np.sort(np.asarray(val, dtype=np.int64))
    fit_mask = np.ones(len(labels), dtype=bool)
    fit_mask[val_idx] = False
    return np.flatnonzero(fit_mask), val_idx


def stratified_holdout(
    train_records: Sequence[T], frac: float, seed: int
) -> Tuple[List[T], List[T]]:
    """Class-stratified (fit_set, val_set) split of a training fold."""
    fit_idx, val_idx = stratified_holdout_indices(
        _labels_of(train_records), frac, seed  # type: ignore[arg-type]
    )
    return [train_records[i] for i in fit_idx], [train_records[i] for i in val_idx]
