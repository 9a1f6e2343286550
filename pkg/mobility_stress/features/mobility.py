"""The eight per-day GPS mobility metrics."""

from __future__ import annotations

import datetime as dt
import logging
import math
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mobility_stress.exceptions import DomainTooWide
from mobility_stress.features.clustering import ClusterModel, cluster_user
from mobility_stress.features.geometry import antipodal_pairs, hull_area
from mobility_stress.features.sequences import collapse_runs, edit_distance
from mobility_stress.geo.trace import (
    DayTrace,
    GeoPoint,
    haversine_array,
    mean_location,
    project_array,
    split_days,
)

logger = logging.getLogger(__name__)

GPS_FEATURES: Tuple[str, ...] = (
    "total_distance_m",
    "max_displacement_m",
    "distance_stddev_m",
    "distinct_tiles",
    "hull_area_m2",
    "tile_seq_diff",
    "cluster_seq_diff",
    "distance_entropy_nats",
)

Anchor = Tuple[float, float]


class MetricConfig(BaseModel):
    """Parameters of the mobility metrics."""

    model_config = ConfigDict(frozen=True)

    tile_size_m: float = Field(default=500.0, gt=0)
    eps_m: float = Field(default=300.0, gt=0)
    min_pts: int = Field(default=5, ge=1)
    bin_minutes: int = Field(default=10, gt=0)


class TileId(NamedTuple):
    ix: int
    iy: int


class MobilityVector(BaseModel):
    """One user-day's metrics. Sequence differences are None when the user has
    no trace for the previous calendar day."""

    model_config = ConfigDict(frozen=True)

    total_distance_m: float = Field(ge=0, allow_inf_nan=False)
    max_displacement_m: float = Field(ge=0, allow_inf_nan=False)
    distance_stddev_m: float = Field(ge=0, allow_inf_nan=False)
    distinct_tiles: int = Field(ge=1)
    hull_area_m2: float = Field(ge=0, allow_inf_nan=False)
    tile_seq_diff: Optional[int] = Field(default=None, ge=0)
    cluster_seq_diff: Optional[int] = Field(default=None, ge=0)
    distance_entropy_nats: float = Field(ge=0, allow_inf_nan=False)

    def as_array(self) -> np.ndarray:
        """Values in `GPS_FEATURES` order, with NaN for missing differences."""
        values = [getattr(self, name) for name in GPS_FEATURES]
        return np.array([np.nan if v is None else float(v) for v in values])


def total_distance(day: DayTrace) -> float:
    """Sum of great-circle steps between consecutive fixes."""
    latlon = day.latlon()
    if len(latlon) < 2:
        return 0.0
    a, b = latlon[:-1], latlon[1:]
    steps = haversine_array(a[:, 0], a[:, 1], b[:, 0], b[:, 1])
    return float(np.sum(steps))


def _pairwise_max(latlon: np.ndarray) -> float:
    best = 0.0
    for i in range(len(latlon) - 1):
        rest = latlon[i + 1 :]
        d = haversine_array(latlon[i, 0], latlon[i, 1], rest[:, 0], rest[:, 1])
        best = max(best, float(np.max(d)))
    return best


def max_displacement(day: DayTrace, anchor: Optional[Anchor] = None) -> float:
    """Largest great-circle distance between any two fixes of the day.

    Candidate pairs come from rotating calipers on the projected hull and are
    re-measured by haversine. Days too wide to project use an exhaustive scan.
    """
    latlon = day.latlon()
    if len(latlon) < 2:
        return 0.0
    try:
        xy = project_array(latlon, anchor or mean_location(latlon))
    except DomainTooWide:
        logger.debug("%s %s: exhaustive displacement scan", day.user_id, day.date)
        return _pairwise_max(latlon)
    pairs = np.asarray(antipodal_pairs(xy))
    d = haversine_array(
        latlon[pairs[:, 0], 0],
        latlon[pairs[:, 0], 1],
        latlon[pairs[:, 1], 0],
        latlon[pairs[:, 1], 1],
    )
    return float(np.max(d))


def distance_stddev(day: DayTrace) -> float:
    """Population standard deviation of fix distances to the day's centroid."""
    latlon = day.latlon()
    if len(latlon) < 2:
        return 0.0
    lat0, lon0 = mean_location(latlon)
    d = haversine_array(lat0, lon0, latlon[:, 0], latlon[:, 1])
    return float(np.std(d))


def tile_ids(day: DayTrace, tile_size_m: float, anchor: Anchor) -> List[TileId]:
    """Grid cell of every fix, without collapsing repeats."""
    if tile_size_m <= 0:
        raise ValueError(f"tile_size_m must be positive, got: {tile_size_m}")
    xy = project_array(day.latlon(), anchor)
    cells = np.floor(xy / tile_size_m).astype(np.int64)
    return [TileId(int(ix), int(iy)) for ix, iy in cells]


def tile_sequence(day: DayTrace, tile_size_m: float, anchor: Anchor) -> List[TileId]:
    """Tiles visited in order, consecutive repeats collapsed."""
    return collapse_runs(tile_ids(day, tile_size_m, anchor))


def distinct_tiles(day: DayTrace, tile_size_m: float, anchor: Anchor) -> int:
    return len(set(tile_ids(day, tile_size_m, anchor)))


def convex_hull_area(day: DayTrace, anchor: Anchor) -> float:
    """Area in m² of the convex hull of the day's projected fixes."""
    return hull_area(project_array(day.latlon(), anchor))


def cluster_sequence(day: DayTrace, model: ClusterModel) -> List[int]:
    """Stay regions visited in order; noise is its own label."""
    return collapse_runs(model.labels_for(day.timestamps()))


def dwell_by_cluster(day: DayTrace, model: ClusterModel) -> Dict[int, int]:
    """Seconds spent per cluster, each interval credited to its starting fix."""
    ts = day.timestamps()
    labels = model.labels_for(ts[:-1])
    dwell: Dict[int, int] = {}
    for label, seconds in zip(labels, np.diff(ts)):
        dwell[label] = dwell.get(label, 0) + int(seconds)
    return dwell


def distance_entropy(day: DayTrace, model: ClusterModel) -> float:
    """Shannon entropy (nats) of the day's dwell time across stay regions."""
    dwell = dwell_by_cluster(day, model)
    total = sum(dwell.values())
    if total <= 0:
        return 0.0
    entropy = 0.0
    for seconds in dwell.values():
        if seconds > 0:
            p = seconds / total
            entropy -= p * math.log(p)
    return max(entropy, 0.0)


def _day_geometry(
    day: DayTrace, cfg: MetricConfig, anchor: Anchor
) -> Optional[Tuple[List[TileId], float, bool]]:
    """Tiles, hull area and whether the user anchor was kept."""
    try:
        tiles = tile_ids(day, cfg.tile_size_m, anchor)
        return tiles, convex_hull_area(day, anchor), True
    except DomainTooWide:
        pass
    local = mean_location(day.latlon())
    try:
        logger.debug(
            "%s %s: projecting around the day centroid", day.user_id, day.date
        )
        tiles = tile_ids(day, cfg.tile_size_m, local)
        return tiles, convex_hull_area(day, local), False
    except DomainTooWide:
        logger.warning(
            "%s %s: trace spans more than a degree, day skipped", day.user_id, day.date
        )
        return None


def compute_day_features(
    user_days: Sequence[DayTrace],
    model: ClusterModel,
    cfg: MetricConfig,
    anchor: Optional[Anchor] = None,
) -> Dict[dt.date, MobilityVector]:
    """All eight metrics for each of one user's days.

    Sequence differences compare with the previous calendar day and are None
    when that day has no trace. A day too wide for the user anchor is
    projected around its own centroid instead; its tile difference, and the
    next day's, are then None because tiles from different anchors do not
    align. Its cluster difference is still computed. A day too wide even for
    its centroid is skipped.
    """
    if anchor is None:
        anchor = mean_location(
            np.concatenate([day.latlon() for day in user_days])
            if user_days
            else [(0.0, 0.0)]
        )
    features: Dict[dt.date, MobilityVector] = {}
    tiles_by_date: Dict[dt.date, Optional[List[TileId]]] = {}
    clusters_by_date: Dict[dt.date, List[int]] = {}
    for day in user_days:
        geometry = _day_geometry(day, cfg, anchor)
        if geometry is None:
            continue
        tiles, area, anchored = geometry
        tile_seq = collapse_runs(tiles)
        cluster_seq = cluster_sequence(day, model)
        previous = day.date - dt.timedelta(days=1)

        tile_diff: Optional[int] = None
        prev_tiles = tiles_by_date.get(previous)
        if anchored and prev_tiles is not None:
            tile_diff = edit_distance(prev_tiles, tile_seq)
        cluster_diff: Optional[int] = None
        if previous in clusters_by_date:
            cluster_diff = edit_distance(clusters_by_date[previous], cluster_seq)

        tiles_by_date[day.date] = tile_seq if anchored else None
        clusters_by_date[day.date] = cluster_seq
        features[day.date] = MobilityVector(
            total_distance_m=total_distance(day),
            max_displacement_m=max_displacement(day, anchor if anchored else None),
            distance_stddev_m=distance_stddev(day),
            distinct_tiles=len(set(tiles)),
            hull_area_m2=area,
            tile_seq_diff=tile_diff,
            cluster_seq_diff=cluster_diff,
            distance_entropy_nats=distance_entropy(day, model),
        )
    return features


def extract_user_features(
    user_id: str,
    points: Iterable[GeoPoint],
    cfg: MetricConfig,
    utc_offset_hours: int,
) -> Dict[dt.date, MobilityVector]:
    """Split, cluster and measure one user's whole-term trace."""
    points = list(points)
    days = split_days(points, utc_offset_hours, user_id=user_id)
    if not days:
        return {}
    model = cluster_user(
        [p for day in days for p in day.points],
        cfg.eps_m,
        cfg.min_pts,
        cfg.bin_minutes,
        user_id=user_id,
    )
    return compute_day_features(days, model, cfg)
