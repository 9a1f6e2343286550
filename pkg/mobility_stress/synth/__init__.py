from .cohort import (
    EMA_CHOICE_COLUMNS,
    EMA_LEVEL_COLUMNS,
    GPS_COLUMNS,
    GROUND_TRUTH_COLUMNS,
    Cohort,
    CohortConfig,
    SignalSpec,
    generate,
    load_cohort_config,
)

__all__ = [
    "EMA_CHOICE_COLUMNS",
    "EMA_LEVEL_COLUMNS",
    "GPS_COLUMNS",
    "GROUND_TRUTH_COLUMNS",
    "Cohort",
    "CohortConfig",
    "SignalSpec",
    "generate",
    "load_cohort_config",
]
