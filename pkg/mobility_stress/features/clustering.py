"""Term-wide stay-region clustering of one user's fixes."""

from __future__ import annotations

import logging
from collections import deque
from typing import Dict, Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mobility_stress.geo.trace import METERS_PER_DEGREE, GeoPoint, haversine_array

logger = logging.getLogger(__name__)

NOISE = -1
"""Label shared by every fix that belongs to no stay region."""

_UNVISITED = -2


class ClusterModel(BaseModel):
    """Stay-region labels for a user's time-binned representative fixes.

    Representatives are ordered by time bin. `labels[i]` is the cluster of
    representative `i`: contiguous integers from 0, or `NOISE`.
    """

    model_config = ConfigDict(frozen=True)

    user_id: str = ""
    eps_m: float = Field(gt=0)
    min_pts: int = Field(ge=1)
    bin_minutes: int = Field(gt=0)
    bins: Tuple[int, ...] = ()
    representatives: Tuple[Tuple[float, float], ...] = ()
    labels: Tuple[int, ...] = ()

    @property
    def cluster_of(self) -> Dict[int, int]:
        """Representative index to cluster label."""
        return dict(enumerate(self.labels))

    @property
    def n_clusters(self) -> int:
        return max(self.labels, default=NOISE) + 1

    def _bin_lookup(self) -> Dict[int, int]:
        return dict(zip(self.bins, self.labels))

    def labels_for(self, timestamps: Iterable[int]) -> List[int]:
        """Cluster label of each fix, through the time bin it falls in.

        Fixes from bins the model never saw are treated as noise.
        """
        lookup = self._bin_lookup()
        width = self.bin_minutes * 60
        return [lookup.get(int(ts) // width, NOISE) for ts in timestamps]


def thin_by_time_bin(
    points: Iterable[GeoPoint], bin_minutes: int
) -> Tuple[List[int], np.ndarray]:
    """One representative per epoch-aligned time bin: the median lat and lon.

    Returns the sorted bin ids and an (n_bins, 2) lat/lon array.
    """
    width = bin_minutes * 60
    grouped: Dict[int, List[Tuple[float, float]]] = {}
    for p in points:
        grouped.setdefault(p.timestamp // width, []).append((p.lat, p.lon))
    bins = sorted(grouped)
    reps = np.empty((len(bins), 2), dtype=np.float64)
    for row, key in enumerate(bins):
        coords = np.asarray(grouped[key], dtype=np.float64)
        reps[row] = np.median(coords, axis=0)
    return bins, reps


class _RegionIndex:
    """Latitude-sorted index answering eps-neighbourhood queries by haversine."""

    def __init__(self, latlon: np.ndarray, eps_m: float) -> None:
        self.latlon = latlon
        self.eps_m = eps_m
        self.order = np.argsort(latlon[:, 0], kind="stable")
        self.sorted_lat = latlon[self.order, 0]
        # great-circle distance is never below the meridional separation
        self.band_deg = eps_m / METERS_PER_DEGREE + 1e-9

    def query(self, idx: int) -> np.ndarray:
        lat, lon = self.latlon[idx]
        lo = np.searchsorted(self.sorted_lat, lat - self.band_deg, side="left")
        hi = np.searchsorted(self.sorted_lat, lat + self.band_deg, side="right")
        candidates = self.order[lo:hi]
        near = self.latlon[candidates]
        dist = haversine_array(lat, lon, near[:, 0], near[:, 1])
        return np.sort(candidates[dist <= self.eps_m])


def dbscan(latlon: np.ndarray, eps_m: float, min_pts: int) -> np.ndarray:
    """Density-based clustering with haversine neighbourhoods.

    Neighbourhoods include the point itself. Clusters are numbered in order
    of their lowest-index core point; a border point joins the lowest
    numbered cluster that has a core point within `eps_m` of it.
    """
    latlon = np.asarray(latlon, dtype=np.float64).reshape(-1, 2)
    n = len(latlon)
    labels = np.full(n, _UNVISITED, dtype=np.int64)
    if n == 0:
        return labels
    index = _RegionIndex(latlon, eps_m)
    cluster_id = 0
    for seed in range(n):
        if labels[seed] != _UNVISITED:
            continue
        neighbours = index.query(seed)
        if len(neighbours) < min_pts:
            labels[seed] = NOISE
            continue
        labels[seed] = cluster_id
        queue = deque(int(i) for i in neighbours)
        while queue:
            current = queue.popleft()
            if labels[current] == NOISE:
                # already queried and not core: border point
                labels[current] = cluster_id
                continue
            if labels[current] != _UNVISITED:
                continue
            labels[current] = cluster_id
            reach = index.query(current)
            if len(reach) >= min_pts:
                queue.extend(int(i) for i in reach if labels[i] in (_UNVISITED, NOISE))
        cluster_id += 1
    return labels


def cluster_user(
    points: Iterable[GeoPoint],
    eps_m: float,
    min_pts: int,
    bin_minutes: int,
    *,
    user_id: str = "",
) -> ClusterModel:
    """Cluster a user's whole-term fixes into stay regions.

    Fixes are first thinned to one median representative per `bin_minutes`
    bin, so the result does not depend on input order.
    """
    if eps_m <= 0:
        raise ValueError(f"eps_m must be positive, got: {eps_m}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be at least 1, got: {min_pts}")
    if bin_minutes <= 0:
        raise ValueError(f"bin_minutes must be positive, got: {bin_minutes}")

    bins, reps = thin_by_time_bin(points, bin_minutes)
    labels = dbscan(reps, eps_m, min_pts)
    model = ClusterModel(
        user_id=user_id,
        eps_m=eps_m,
        min_pts=min_pts,
        bin_minutes=bin_minutes,
        bins=tuple(bins),
        representatives=tuple((float(lat), float(lon)) for lat, lon in reps),
        labels=tuple(int(label) for label in labels),
    )
    logger.debug(
        "user %s: %d representatives, %d clusters, %d noise",
        user_id,
        len(bins),
        model.n_clusters,
        sum(1 for label in model.labels if label == NOISE),
    )
    return model
