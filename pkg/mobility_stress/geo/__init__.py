from .trace import (
    EARTH_RADIUS_M,
    DayTrace,
    GeoPoint,
    PlanarPoint,
    haversine_array,
    haversine_m,
    local_date,
    mean_location,
    project_array,
    project_local,
    split_days,
    unproject_local,
)

__all__ = [
    "EARTH_RADIUS_M",
    "DayTrace",
    "GeoPoint",
    "PlanarPoint",
    "haversine_array",
    "haversine_m",
    "local_date",
    "mean_location",
    "project_array",
    "project_local",
    "split_days",
    "unproject_local",
]
