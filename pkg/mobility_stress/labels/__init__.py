from .stress import (
    EMA_CHOICES,
    DayLabel,
    StressClass,
    StressResponse,
    daily_average,
    label_days,
    response_to_level,
    tri_class,
)

__all__ = [
    "EMA_CHOICES",
    "DayLabel",
    "StressClass",
    "StressResponse",
    "daily_average",
    "label_days",
    "response_to_level",
    "tri_class",
]
