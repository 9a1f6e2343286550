"""Builders shared by unit and integration tests."""

from __future__ import annotations

import datetime as dt
import math
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from mobility_stress.dataset import DayRecord
from mobility_stress.geo import DayTrace, GeoPoint
from mobility_stress.geo.trace import METERS_PER_DEGREE
from mobility_stress.labels import StressClass

ANCHOR = (43.7044, -72.2887)
TERM_START = dt.date(2013, 3, 27)
UTC_OFFSET = -4


def midnight(date: dt.date, utc_offset_hours: int = UTC_OFFSET) -> int:
    tz = dt.timezone(dt.timedelta(hours=utc_offset_hours))
    return int(dt.datetime.combine(date, dt.time(0), tzinfo=tz).timestamp())


def offset_latlon(
    east_m: float, north_m: float, anchor: Tuple[float, float] = ANCHOR
) -> Tuple[float, float]:
    """Lat/lon `east_m`, `north_m` meters from `anchor`."""
    lat = anchor[0] + north_m / METERS_PER_DEGREE
    lon = anchor[1] + east_m / (METERS_PER_DEGREE * math.cos(math.radians(anchor[0])))
    return lat, lon


def points_from_offsets(
    offsets_m: Sequence[Tuple[float, float]],
    start: int,
    step_s: int = 600,
) -> List[GeoPoint]:
    """Fixes at `start`, `start + step_s`, ... at the given meter offsets."""
    out = []
    for k, (east, north) in enumerate(offsets_m):
        lat, lon = offset_latlon(east, north)
        out.append(GeoPoint(timestamp=start + k * step_s, lat=lat, lon=lon))
    return out


def make_day(
    offsets_m: Sequence[Tuple[float, float]],
    date: dt.date = TERM_START,
    *,
    user_id: str = "u00",
    start_hour: int = 8,
    step_s: int = 600,
) -> DayTrace:
    points = points_from_offsets(offsets_m, midnight(date) + start_hour * 3600, step_s)
    return DayTrace(
        user_id=user_id, date=date, points=tuple(points), utc_offset_hours=UTC_OFFSET
    )


def random_day(
    rng: np.random.Generator, n: int = 200, spread_m: float = 1_000.0
) -> DayTrace:
    offsets = rng.uniform(-spread_m, spread_m, size=(n, 2))
    return make_day([tuple(o) for o in offsets], step_s=60, start_hour=1)


def make_records(
    features: np.ndarray,
    labels: Sequence[int],
    *,
    users: int = 4,
) -> List[DayRecord]:
    """Records with the given GPS-metric block and weekday/term bits filled in.

    `features` may have 8 columns (GPS only) or all 12.
    """
    features = np.asarray(features, dtype=np.float64)
    records = []
    for i, (row, label) in enumerate(zip(features, labels)):
        user = f"u{i % users:02d}"
        date = TERM_START + dt.timedelta(days=i // users)
        if row.shape[0] == 8:
            third = (i // users) % 3
            weekend = float(date.weekday() >= 5)
            temporal = [weekend] + [float(third == t) for t in range(3)]
            row = np.concatenate([row, temporal])
        records.append(
            DayRecord(
                user_id=user,
                date=date,
                features=tuple(float(v) for v in row),
                label=StressClass(int(label)),
            )
        )
    return records


def write_text(path: Path, lines: Sequence[str]) -> Path:
    path.write_text("\n".join(lines) + "\n")
    return path
