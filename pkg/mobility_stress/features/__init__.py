from .clustering import NOISE, ClusterModel, cluster_user, dbscan, thin_by_time_bin
from .geometry import antipodal_pairs, convex_hull_indices, hull_area, hull_diameter
from .mobility import (
    GPS_FEATURES,
    MetricConfig,
    MobilityVector,
    TileId,
    cluster_sequence,
    compute_day_features,
    convex_hull_area,
    distance_entropy,
    distance_stddev,
    distinct_tiles,
    extract_user_features,
    max_displacement,
    tile_ids,
    tile_sequence,
    total_distance,
)
from .sequences import collapse_runs, edit_distance

__all__ = [
    "GPS_FEATURES",
    "NOISE",
    "ClusterModel",
    "MetricConfig",
    "MobilityVector",
    "TileId",
    "antipodal_pairs",
    "cluster_sequence",
    "cluster_user",
    "collapse_runs",
    "compute_day_features",
    "convex_hull_area",
    "convex_hull_indices",
    "dbscan",
    "distance_entropy",
    "distance_stddev",
    "distinct_tiles",
    "edit_distance",
    "extract_user_features",
    "hull_area",
    "hull_diameter",
    "max_displacement",
    "thin_by_time_bin",
    "tile_ids",
    "tile_sequence",
    "total_distance",
]
