from .assembly import (
    FEATURE_NAMES,
    N_FEATURES,
    TEMPORAL_FEATURES,
    DayRecord,
    TermCalendar,
    assemble,
    records_to_arrays,
    standardize_per_user,
    temporal_onehots,
    zscore_columns,
)
from .splits import (
    FoldSpec,
    stratified_holdout,
    stratified_holdout_indices,
    stratified_kfold,
)

__all__ = [
    "FEATURE_NAMES",
    "N_FEATURES",
    "TEMPORAL_FEATURES",
    "DayRecord",
    "FoldSpec",
    "TermCalendar",
    "assemble",
    "records_to_arrays",
    "standardize_per_user",
    "stratified_holdout",
    "stratified_holdout_indices",
    "stratified_kfold",
    "temporal_onehots",
    "zscore_columns",
]
