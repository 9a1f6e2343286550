"""Synthetic student cohorts with a planted mobility/stress dependence.

Every user gets a home, a campus and one or more leisure places scattered
around a shared anchor. Each day follows a weekday or weekend itinerary
over those places; fixes sit inside the stay regions with Gaussian jitter
and are interpolated at walking speed while travelling. Stress answers are
drawn around a daily mean that depends linearly on the weekend bit, the
entropy of the planned dwell times and the planned walking distance.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from typing import Any, Dict, List, Literal, Mapping, NamedTuple, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mobility_stress.exceptions import ConfigInvalid
from mobility_stress.geo.trace import METERS_PER_DEGREE, haversine_array
from mobility_stress.labels.stress import CHOICE_LEVELS

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86_400
WALKING_SPEED_MPS = 1.4
MAX_COHORT_RADIUS_M = 20_000.0

HOME, CAMPUS, LEISURE = 0, 1, 2
PLACE_NAMES = ("home", "campus", "leisure")

GPS_COLUMNS = ["user_id", "timestamp", "lat", "lon"]
EMA_LEVEL_COLUMNS = ["user_id", "timestamp", "level"]
EMA_CHOICE_COLUMNS = ["user_id", "timestamp", "choice"]
GROUND_TRUTH_COLUMNS = [
    "user_id",
    "date",
    "weekend",
    "has_gps",
    "itinerary",
    "entropy_nats",
    "distance_km",
    "stress_mean",
]

GpsRow = Tuple[str, int, float, float]
EmaRow = Tuple[str, int, int]

_LEVEL_TEXT = {level: text.capitalize() for text, level in CHOICE_LEVELS.items()}


class SignalSpec(BaseModel):
    """stress mean = baseline + weekend*w + entropy*e + distance_km*d."""

    model_config = ConfigDict(frozen=True)

    baseline: float = 2.0
    weekend: float = 0.8
    entropy: float = 1.2
    distance: float = 0.15

    @property
    def is_null(self) -> bool:
        return self.weekend == 0 and self.entropy == 0 and self.distance == 0


class CohortConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_users: int = Field(default=20, ge=1)
    first_day: dt.date = dt.date(2013, 3, 27)
    n_days: int = Field(default=60, ge=1)
    utc_offset_hours: int = Field(default=-4, ge=-12, le=14)
    anchor: Tuple[float, float] = (43.7044, -72.2887)
    """Cohort center (lat, lon); every place lies within `place_spread_m` of it."""
    place_radii_m: Tuple[float, ...] = (30.0, 60.0, 40.0)
    """Stay-region radius per place: home, campus, then leisure places."""
    place_spread_m: float = Field(default=3_000.0, ge=0)
    fixes_per_day: int = Field(default=144, ge=2, le=8_640)
    interval_jitter_s: int = Field(default=60, ge=0)
    jitter_m: float = Field(default=12.0, ge=0)
    gps_gap_probability: float = Field(default=0.03, ge=0, lt=1)
    response_rate: float = Field(default=0.95, ge=0, le=1)
    max_responses_per_day: int = Field(default=3, ge=1)
    weekday_leisure_probability: float = Field(default=0.3, ge=0, le=1)
    weekend_outing_probability: float = Field(default=0.75, ge=0, le=1)
    signal: SignalSpec = Field(default_factory=SignalSpec)
    noise: float = Field(default=0.5, ge=0)
    """Std of the per-response Gaussian noise before rounding to 1..5."""
    user_offset_sd: float = Field(default=0.4, ge=0)
    ema_format: Literal["level", "choice"] = "level"
    seed: int = 0

    @model_validator(mode="after")
    def _check_geometry(self) -> "CohortConfig":
        if not self.place_radii_m:
            raise ValueError("at least one place (home) is required")
        if any(r <= 0 for r in self.place_radii_m):
            raise ValueError(f"place radii must be positive, got: {self.place_radii_m}")
        if self.place_spread_m + max(self.place_radii_m) > MAX_COHORT_RADIUS_M:
            raise ValueError(
                f"places must stay within {MAX_COHORT_RADIUS_M:.0f} m of the anchor"
            )
        if 2 * self.interval_jitter_s >= self.fix_interval_s:
            raise ValueError("interval_jitter_s must be below half the fix interval")
        lat, lon = self.anchor
        if not (-80.0 <= lat <= 80.0 and -180.0 <= lon <= 180.0):
            raise ValueError(f"anchor out of range: {self.anchor}")
        return self

    @property
    def n_places(self) -> int:
        return len(self.place_radii_m)

    @property
    def fix_interval_s(self) -> int:
        return SECONDS_PER_DAY // self.fixes_per_day

    @property
    def last_day(self) -> dt.date:
        return self.first_day + dt.timedelta(days=self.n_days - 1)


def load_cohort_config(values: Mapping[str, Any]) -> CohortConfig:
    """Validate raw values into a `CohortConfig`.

    Raises:
        ConfigInvalid: on unknown keys or out-of-range values.
    """
    try:
        return CohortConfig.model_validate(dict(values))
    except ValidationError as e:
        raise ConfigInvalid(f"invalid cohort configuration: {e}") from e


class Cohort(NamedTuple):
    gps: pd.DataFrame
    ema: pd.DataFrame
    ground_truth: pd.DataFrame


class _Stop(NamedTuple):
    place: int
    arrive: float
    depart: float


def _offset_deg(
    lat0: float, east_m: np.ndarray, north_m: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    dlat = north_m / METERS_PER_DEGREE
    dlon = east_m / (METERS_PER_DEGREE * math.cos(math.radians(lat0)))
    return dlat, dlon


def _place_centers(cfg: CohortConfig, rng: np.random.Generator) -> np.ndarray:
    """(n_places, 2) lat/lon, uniform over the disk of radius place_spread_m."""
    n = cfg.n_places
    r = cfg.place_spread_m * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    dlat, dlon = _offset_deg(cfg.anchor[0], r * np.cos(theta), r * np.sin(theta))
    return np.column_stack([cfg.anchor[0] + dlat, cfg.anchor[1] + dlon])


def _plan(
    weekend: bool, cfg: CohortConfig, rng: np.random.Generator
) -> List[Tuple[int, float]]:
    """(place role, dwell seconds) visits after leaving home in the morning."""
    hour = 3600.0
    leisure = LEISURE + int(rng.integers(0, max(cfg.n_places - LEISURE, 1)))
    visits: List[Tuple[int, float]] = []
    if not weekend:
        visits.append((CAMPUS, rng.uniform(6.0, 9.0) * hour))
        if rng.uniform() < cfg.weekday_leisure_probability:
            visits.append((leisure, rng.uniform(1.0, 3.0) * hour))
    elif rng.uniform() < cfg.weekend_outing_probability:
        visits.append((leisure, rng.uniform(2.0, 5.0) * hour))
        if rng.uniform() < 0.3:
            visits.append((CAMPUS, rng.uniform(1.0, 2.0) * hour))
    return visits


def _schedule(
    weekend: bool, centers: np.ndarray, cfg: CohortConfig, rng: np.random.Generator
) -> Tuple[List[_Stop], float]:
    """Stops over the local day and the planned walking distance in meters."""
    departure = rng.uniform(7.5, 9.5) if not weekend else rng.uniform(10.0, 14.0)
    visits = [(p if p < cfg.n_places else HOME, d) for p, d in _plan(weekend, cfg, rng)]
    visits.append((HOME, float(SECONDS_PER_DAY)))

    stops = [_Stop(HOME, 0.0, departure * 3600.0)]
    distance = 0.0
    for place, dwell in visits:
        last = stops[-1]
        if place == last.place:
            stops[-1] = last._replace(depart=last.depart + dwell)
            continue
        leg = float(
            haversine_array(
                centers[last.place, 0],
                centers[last.place, 1],
                centers[place, 0],
                centers[place, 1],
            )
        )
        distance += leg
        arrive = last.depart + leg / WALKING_SPEED_MPS
        stops.append(_Stop(place, arrive, arrive + dwell))
    return stops, distance


def _dwell_entropy(stops: List[_Stop]) -> float:
    dwell: Dict[int, float] = {}
    for stop in stops:
        start = min(stop.arrive, SECONDS_PER_DAY)
        end = min(stop.depart, SECONDS_PER_DAY)
        dwell[stop.place] = dwell.get(stop.place, 0.0) + max(end - start, 0.0)
    shares = np.array([v for v in dwell.values() if v > 0])
    shares = shares / shares.sum()
    return max(float(-(shares * np.log(shares)).sum()), 0.0)


def _fix_times(cfg: CohortConfig, rng: np.random.Generator) -> np.ndarray:
    interval = cfg.fix_interval_s
    times = []
    t = int(rng.integers(0, interval))
    while t < SECONDS_PER_DAY:
        times.append(t)
        jitter = cfg.interval_jitter_s
        t += interval + int(rng.integers(-jitter, jitter + 1))
    return np.asarray(times, dtype=np.int64)


def _day_fixes(
    stops: List[_Stop], centers: np.ndarray, cfg: CohortConfig, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Seconds after local midnight and (n, 2) lat/lon of one day's fixes."""
    knots_t: List[float] = []
    knots_ll: List[np.ndarray] = []
    for stop in stops:
        knots_t.extend([stop.arrive, stop.depart])
        knots_ll.extend([centers[stop.place], centers[stop.place]])
    knots = np.asarray(knots_ll)
    times = _fix_times(cfg, rng)
    lat = np.interp(times, knots_t, knots[:, 0])
    lon = np.interp(times, knots_t, knots[:, 1])

    if cfg.jitter_m > 0:
        offsets = rng.normal(0.0, cfg.jitter_m, size=(len(times), 2))
        radius = np.zeros(len(times))
        for stop in stops:
            staying = (times >= stop.arrive) & (times <= stop.depart)
            radius[staying] = cfg.place_radii_m[stop.place]
        norm = np.hypot(offsets[:, 0], offsets[:, 1])
        # stay fixes are clipped to their region; travel fixes keep raw jitter
        scale = np.ones(len(times))
        clip = (radius > 0) & (norm > radius)
        scale[clip] = radius[clip] / norm[clip]
        east, north = offsets[:, 0] * scale, offsets[:, 1] * scale
        dlat, dlon = _offset_deg(cfg.anchor[0], east, north)
        lat = lat + dlat
        lon = lon + dlon
    return times, np.column_stack([lat, lon])


def _level(mean: float, noise: float, rng: np.random.Generator) -> int:
    value = mean + (rng.normal(0.0, noise) if noise > 0 else 0.0)
    return int(np.clip(np.floor(value + 0.5), 1, 5))


def _generate_user(
    user_id: str, cfg: CohortConfig, rng: np.random.Generator
) -> Tuple[List[GpsRow], List[EmaRow], List[Dict[str, Any]]]:
    tz = dt.timezone(dt.timedelta(hours=cfg.utc_offset_hours))
    centers = _place_centers(cfg, rng)
    user_offset = rng.normal(0.0, cfg.user_offset_sd) if cfg.user_offset_sd > 0 else 0.0
    gps: List[GpsRow] = []
    ema: List[EmaRow] = []
    truth: List[Dict[str, Any]] = []

    for day in range(cfg.n_days):
        date = cfg.first_day + dt.timedelta(days=day)
        midnight = int(dt.datetime.combine(date, dt.time(0), tzinfo=tz).timestamp())
        weekend = date.weekday() >= 5
        stops, distance_m = _schedule(weekend, centers, cfg, rng)
        entropy = _dwell_entropy(stops)
        has_gps = bool(rng.uniform() >= cfg.gps_gap_probability)
        if has_gps:
            times, latlon = _day_fixes(stops, centers, cfg, rng)
            gps.extend(
                (user_id, midnight + int(t), float(lat), float(lon))
                for t, (lat, lon) in zip(times, latlon)
            )

        s = cfg.signal
        mean = (
            s.baseline
            + user_offset
            + s.weekend * weekend
            + s.entropy * entropy
            + s.distance * distance_m / 1000.0
        )
        if rng.uniform() < cfg.response_rate:
            n = int(rng.integers(1, cfg.max_responses_per_day + 1))
            window = np.arange(9 * 3600, 22 * 3600)
            seconds = np.sort(rng.choice(window, size=n, replace=False))
            ema.extend(
                (user_id, midnight + int(t), _level(mean, cfg.noise, rng))
                for t in seconds
            )

        truth.append(
            {
                "user_id": user_id,
                "date": date.isoformat(),
                "weekend": int(weekend),
                "has_gps": int(has_gps),
                "itinerary": ">".join(
                    PLACE_NAMES[min(st.place, LEISURE)] for st in stops
                ),
                "entropy_nats": entropy,
                "distance_km": distance_m / 1000.0,
                "stress_mean": mean,
            }
        )
    return gps, ema, truth


def generate(cfg: CohortConfig | Mapping[str, Any] | None = None) -> Cohort:
    """GPS, EMA and ground-truth tables of a synthetic cohort.

    Users are generated from independent child seeds of `cfg.seed`, so the
    output is a pure function of the configuration.

    Raises:
        ConfigInvalid: if `cfg` is a mapping that does not validate.
    """
    if cfg is None:
        cfg = CohortConfig()
    elif not isinstance(cfg, CohortConfig):
        cfg = load_cohort_config(cfg)

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_users)
    width = len(str(max(cfg.n_users - 1, 0)))
    gps_rows: List[GpsRow] = []
    ema_rows: List[EmaRow] = []
    truth_rows: List[Dict[str, Any]] = []
    for i, seed in enumerate(seeds):
        user_id = f"u{i:0{max(width, 2)}d}"
        gps, ema, truth = _generate_user(user_id, cfg, np.random.default_rng(seed))
        gps_rows.extend(gps)
        ema_rows.extend(ema)
        truth_rows.extend(truth)

    gps_df = pd.DataFrame(gps_rows, columns=GPS_COLUMNS)
    ema_df = pd.DataFrame(ema_rows, columns=EMA_LEVEL_COLUMNS)
    if cfg.ema_format == "choice":
        choices = ema_df.assign(choice=ema_df["level"].map(_LEVEL_TEXT))
        ema_df = choices[EMA_CHOICE_COLUMNS]
    truth_df = pd.DataFrame(truth_rows, columns=GROUND_TRUTH_COLUMNS)
    logger.info(
        "generated %d users: %d fixes, %d EMA responses",
        cfg.n_users,
        len(gps_df),
        len(ema_df),
    )
    return Cohort(gps=gps_df, ema=ema_df, ground_truth=truth_df)
