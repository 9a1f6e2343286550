"""Geographic primitives: great-circle distance, local projection, day windows."""

from __future__ import annotations

import datetime as dt
import logging
import math
from itertools import groupby
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from mobility_stress.exceptions import DomainTooWide

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEGREE = EARTH_RADIUS_M * math.pi / 180.0

# campus-scale bound for the equirectangular approximation, in degrees
MAX_PROJECTION_SPAN_DEG = 1.0

MIN_UTC_OFFSET_HOURS = -12
MAX_UTC_OFFSET_HOURS = 14

FloatOrArray = Union[float, np.ndarray]


class GeoPoint(BaseModel):
    """A timestamped WGS-84 fix."""

    model_config = ConfigDict(frozen=True)

    timestamp: int = Field(ge=0)
    """Seconds since the Unix epoch."""
    lat: float = Field(ge=-90.0, le=90.0, allow_inf_nan=False)
    lon: float = Field(ge=-180.0, le=180.0, allow_inf_nan=False)


class PlanarPoint(BaseModel):
    """Meters east (`x`) and north (`y`) of a projection anchor."""

    model_config = ConfigDict(frozen=True)

    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)


def local_date(timestamp: int, utc_offset_hours: int) -> dt.date:
    """Calendar date of `timestamp` in a fixed UTC offset."""
    tz = dt.timezone(dt.timedelta(hours=utc_offset_hours))
    return dt.datetime.fromtimestamp(timestamp, tz=tz).date()


def _check_offset(utc_offset_hours: int) -> None:
    if not MIN_UTC_OFFSET_HOURS <= utc_offset_hours <= MAX_UTC_OFFSET_HOURS:
        raise ValueError(
            f"utc_offset_hours must be in [{MIN_UTC_OFFSET_HOURS}, "
            f"{MAX_UTC_OFFSET_HOURS}], got: {utc_offset_hours}"
        )


class DayTrace(BaseModel):
    """One user's fixes for one local calendar day, strictly time-ordered."""

    model_config = ConfigDict(frozen=True)

    user_id: str
    date: dt.date
    points: Tuple[GeoPoint, ...]
    utc_offset_hours: int = 0

    @model_validator(mode="after")
    def _check_window(self) -> "DayTrace":
        if not self.points:
            raise ValueError("a DayTrace needs at least one point")
        _check_offset(self.utc_offset_hours)
        previous = -1
        for point in self.points:
            if point.timestamp <= previous:
                raise ValueError("DayTrace points must be strictly increasing in time")
            previous = point.timestamp
        first = local_date(self.points[0].timestamp, self.utc_offset_hours)
        last = local_date(self.points[-1].timestamp, self.utc_offset_hours)
        if first != self.date or last != self.date:
            raise ValueError(
                f"DayTrace points must fall on {self.date.isoformat()} "
                f"(UTC{self.utc_offset_hours:+d})"
            )
        return self

    def timestamps(self) -> np.ndarray:
        return np.fromiter((p.timestamp for p in self.points), dtype=np.int64)

    def latlon(self) -> np.ndarray:
        """(n, 2) array of latitude, longitude in degrees."""
        return np.array([(p.lat, p.lon) for p in self.points], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.points)


def haversine_array(
    lat1: FloatOrArray, lon1: FloatOrArray, lat2: FloatOrArray, lon2: FloatOrArray
) -> np.ndarray:
    """Vectorised great-circle distance in meters between degree coordinates."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    a = np.clip(a, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_M * np.arctan2(np.sqrt(a), np.sqrt(1.0 - a))


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two fixes, in meters."""
    return float(haversine_array(a.lat, a.lon, b.lat, b.lon))


def _wrapped_lon_gap(lon: FloatOrArray, lon0: float) -> np.ndarray:
    return (np.asarray(lon, dtype=np.float64) - lon0 + 180.0) % 360.0 - 180.0


def project_array(latlon: np.ndarray, anchor: Tuple[float, float]) -> np.ndarray:
    """Equirectangular projection of an (n, 2) lat/lon array around `anchor`.

    Returns an (n, 2) array of meters east and north of the anchor.

    Raises:
        DomainTooWide: if any point is a degree or more from the anchor in
            latitude or longitude.
    """
    lat0, lon0 = anchor
    latlon = np.asarray(latlon, dtype=np.float64).reshape(-1, 2)
    dlat = latlon[:, 0] - lat0
    dlon = _wrapped_lon_gap(latlon[:, 1], lon0)
    if latlon.size and (
        np.max(np.abs(dlat)) >= MAX_PROJECTION_SPAN_DEG
        or np.max(np.abs(dlon)) >= MAX_PROJECTION_SPAN_DEG
    ):
        raise DomainTooWide(
            f"points span beyond {MAX_PROJECTION_SPAN_DEG} degree of anchor "
            f"({lat0:.6f}, {lon0:.6f})"
        )
    x = dlon * math.cos(math.radians(lat0)) * METERS_PER_DEGREE
    y = dlat * METERS_PER_DEGREE
    return np.column_stack((x, y))


def project_local(p: GeoPoint, anchor: GeoPoint) -> PlanarPoint:
    """Project one fix into meters around `anchor`."""
    xy = project_array(np.array([[p.lat, p.lon]]), (anchor.lat, anchor.lon))
    return PlanarPoint(x=float(xy[0, 0]), y=float(xy[0, 1]))


def unproject_local(q: PlanarPoint, anchor: GeoPoint) -> Tuple[float, float]:
    """Inverse of `project_local`: (lat, lon) in degrees."""
    lat = anchor.lat + q.y / METERS_PER_DEGREE
    lon = anchor.lon + q.x / (math.cos(math.radians(anchor.lat)) * METERS_PER_DEGREE)
    lon = (lon + 180.0) % 360.0 - 180.0
    return lat, lon


def split_days(
    user_points: Iterable[GeoPoint], utc_offset_hours: int, *, user_id: str = ""
) -> List[DayTrace]:
    """Partition one user's fixes into time-ordered local days.

    Fixes sharing a timestamp keep the first after sorting by
    (timestamp, lat, lon). Days without fixes are absent from the output.
    """
    _check_offset(utc_offset_hours)
    ordered = sorted(user_points, key=lambda p: (p.timestamp, p.lat, p.lon))
    unique: List[GeoPoint] = []
    for point in ordered:
        if unique and unique[-1].timestamp == point.timestamp:
            continue
        unique.append(point)
    dropped = len(ordered) - len(unique)
    if dropped:
        logger.debug("user %s: dropped %d duplicate timestamps", user_id, dropped)

    days: List[DayTrace] = []

    def day_of(p: GeoPoint) -> dt.date:
        return local_date(p.timestamp, utc_offset_hours)

    for date, group in groupby(unique, key=day_of):
        days.append(
            DayTrace(
                user_id=user_id,
                date=date,
                points=tuple(group),
                utc_offset_hours=utc_offset_hours,
            )
        )
    return days


def mean_location(
    latlon: Sequence[Sequence[float]] | np.ndarray,
) -> Tuple[float, float]:
    """Arithmetic mean (lat, lon) of a point set."""
    arr = np.asarray(latlon, dtype=np.float64).reshape(-1, 2)
    return float(arr[:, 0].mean()), float(arr[:, 1].mean())
