"""Stress EMA responses to per-user tri-class day labels."""

from __future__ import annotations

import datetime as dt
import logging
from enum import IntEnum
from typing import Dict, Iterable, List, Mapping, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mobility_stress.exceptions import UnknownChoice
from mobility_stress.geo.trace import local_date

logger = logging.getLogger(__name__)

# Answer order of the "Right now, I am ..." prompt; raw answer codes index it from 1.
EMA_CHOICES: Tuple[str, ...] = (
    "A little stressed",
    "Definitely stressed",
    "Stressed out",
    "Feeling good",
    "Feeling great",
)

CHOICE_LEVELS: Dict[str, int] = {
    "feeling great": 1,
    "feeling good": 2,
    "a little stressed": 3,
    "definitely stressed": 4,
    "stressed out": 5,
}

MEDIAN_TOLERANCE = 1e-9

UserDay = Tuple[str, dt.date]


class StressClass(IntEnum):
    BELOW_MEDIAN = 0
    MEDIAN = 1
    ABOVE_MEDIAN = 2


class StressResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    user_id: str
    timestamp: int = Field(ge=0)
    level: int = Field(ge=1, le=5)


class DayLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    user_id: str
    date: dt.date
    daily_mean: float
    stress_class: StressClass


def response_to_level(choice: Union[str, int]) -> int:
    """Map an EMA answer to the 1 (calm) .. 5 (stressed out) scale.

    Text is matched case-insensitively. An integer is read as the raw answer
    code, i.e. the 1-based position in `EMA_CHOICES`.

    Raises:
        UnknownChoice: for text or codes outside the five answers.
    """
    if isinstance(choice, int) and not isinstance(choice, bool):
        if not 1 <= choice <= len(EMA_CHOICES):
            raise UnknownChoice(
                f"answer code must be in 1..{len(EMA_CHOICES)}, got: {choice}"
            )
        choice = EMA_CHOICES[choice - 1]
    key = " ".join(str(choice).split()).lower()
    try:
        return CHOICE_LEVELS[key]
    except KeyError:
        raise UnknownChoice(f"unrecognised stress answer: {choice!r}") from None


def daily_average(
    responses: Iterable[StressResponse], utc_offset_hours: int
) -> Dict[UserDay, float]:
    """Mean level per user per local day."""
    sums: Dict[UserDay, List[int]] = {}
    for response in responses:
        key = (response.user_id, local_date(response.timestamp, utc_offset_hours))
        sums.setdefault(key, []).append(response.level)
    return {key: sum(levels) / len(levels) for key, levels in sums.items()}


def tri_class(user_daily: Mapping[dt.date, float]) -> Dict[dt.date, StressClass]:
    """Class each day against the median of the user's own daily means."""
    if not user_daily:
        raise ValueError("tri_class needs at least one day")
    median = float(np.median(np.fromiter(user_daily.values(), dtype=np.float64)))
    classes: Dict[dt.date, StressClass] = {}
    for date, mean in user_daily.items():
        if abs(mean - median) <= MEDIAN_TOLERANCE:
            classes[date] = StressClass.MEDIAN
        elif mean < median:
            classes[date] = StressClass.BELOW_MEDIAN
        else:
            classes[date] = StressClass.ABOVE_MEDIAN
    return classes


def label_days(
    responses: Iterable[StressResponse],
    utc_offset_hours: int,
    min_days_per_user: int = 3,
) -> List[DayLabel]:
    """Daily-average, then tri-class each user with enough labeled days.

    Returns labels sorted by (user_id, date).
    """
    if min_days_per_user < 1:
        raise ValueError(
            f"min_days_per_user must be at least 1, got: {min_days_per_user}"
        )
    by_user: Dict[str, Dict[dt.date, float]] = {}
    for (user_id, date), mean in daily_average(responses, utc_offset_hours).items():
        by_user.setdefault(user_id, {})[date] = mean

    labels: List[DayLabel] = []
    excluded = 0
    for user_id in sorted(by_user):
        daily = by_user[user_id]
        if len(daily) < min_days_per_user:
            excluded += 1
            continue
        for date, stress_class in sorted(tri_class(daily).items()):
            labels.append(
                DayLabel(
                    user_id=user_id,
                    date=date,
                    daily_mean=daily[date],
                    stress_class=stress_class,
                )
            )
    if excluded:
        logger.info(
            "excluded %d users with fewer than %d labeled days",
            excluded,
            min_days_per_user,
        )
    logger.info(
        "labeled %d user-days across %d users", len(labels), len(by_user) - excluded
    )
    return labels
