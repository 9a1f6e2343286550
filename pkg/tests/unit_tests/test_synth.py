"""Unit tests for the synthetic cohort generator."""

import datetime as dt

import numpy as np
import pandas as pd
import pytest

from mobility_stress.exceptions import ConfigInvalid
from mobility_stress.geo import haversine_array, local_date
from mobility_stress.labels import EMA_CHOICES, response_to_level
from mobility_stress.synth import CohortConfig, SignalSpec, generate
from mobility_stress.synth.cohort import MAX_COHORT_RADIUS_M

SMALL = {"n_users": 3, "n_days": 14, "fixes_per_day": 48}


def small(**overrides) -> CohortConfig:
    return CohortConfig(**{**SMALL, **overrides})


class TestConfig:
    """Test cohort configuration validation."""

    @pytest.mark.parametrize(
        "values",
        [
            {"n_users": 0},
            {"unknown_key": 1},
            {"place_spread_m": 19_990.0},
            {"place_radii_m": (30.0, -1.0)},
            {"fixes_per_day": 48, "interval_jitter_s": 900},
            {"anchor": (85.0, 0.0)},
            {"ema_format": "emoji"},
        ],
    )
    def test_invalid(self, values: dict) -> None:
        """Out-of-range or unknown settings raise ConfigInvalid."""
        with pytest.raises(ConfigInvalid):
            generate(values)

    def test_derived_properties(self) -> None:
        """Fix interval and last day follow from the settings."""
        cfg = small()
        assert cfg.fix_interval_s == 1800
        assert cfg.last_day == dt.date(2013, 4, 9)
        assert cfg.n_places == 3
        assert SignalSpec(weekend=0, entropy=0, distance=0).is_null


class TestGenerate:
    """Test the generated tables."""

    def test_deterministic(self) -> None:
        """The same configuration yields identical tables."""
        a, b = generate(small(seed=4)), generate(small(seed=4))
        for left, right in zip(a, b):
            pd.testing.assert_frame_equal(left, right)
        assert not generate(small(seed=5)).gps.equals(a.gps)

    def test_table_shapes(self) -> None:
        """One ground-truth row per user-day and sorted fixes per user."""
        cohort = generate(small(gps_gap_probability=0.0))
        assert len(cohort.ground_truth) == 3 * 14
        assert cohort.ground_truth["has_gps"].eq(1).all()
        assert sorted(cohort.gps["user_id"].unique()) == ["u00", "u01", "u02"]
        for _, user in cohort.gps.groupby("user_id"):
            assert user["timestamp"].is_monotonic_increasing
            days = {local_date(int(t), -4) for t in user["timestamp"]}
            assert len(days) == 14

    def test_weekend_only_signal(self) -> None:
        """Without noise, every weekend answer is one level above the weekdays."""
        cfg = small(
            signal=SignalSpec(baseline=2.0, weekend=1.0, entropy=0.0, distance=0.0),
            noise=0.0,
            user_offset_sd=0.0,
            response_rate=1.0,
        )
        ema = generate(cfg).ema
        dates = [local_date(int(t), -4) for t in ema["timestamp"]]
        weekend = np.array([d.weekday() >= 5 for d in dates])
        assert set(ema["level"][weekend]) == {3}
        assert set(ema["level"][~weekend]) == {2}

    def test_single_place_cohort(self) -> None:
        """With only a home, nobody travels and every fix stays in the region."""
        cohort = generate(small(place_radii_m=(30.0,)))
        truth = cohort.ground_truth
        assert truth["entropy_nats"].eq(0.0).all()
        assert truth["distance_km"].eq(0.0).all()
        assert truth["itinerary"].eq("home").all()
        for _, user in cohort.gps.groupby("user_id"):
            latlon = user[["lat", "lon"]].to_numpy()
            center = latlon.mean(axis=0)
            d = haversine_array(center[0], center[1], latlon[:, 0], latlon[:, 1])
            assert float(d.max()) <= 61.0

    def test_fixes_within_cohort_radius(self) -> None:
        """The widest allowed spread keeps every fix near the 20 km disk."""
        cfg = small(place_spread_m=MAX_COHORT_RADIUS_M - 60.0, n_days=3)
        gps = generate(cfg).gps
        lat, lon = gps["lat"].to_numpy(), gps["lon"].to_numpy()
        d = haversine_array(cfg.anchor[0], cfg.anchor[1], lat, lon)
        assert float(d.max()) <= MAX_COHORT_RADIUS_M + 100.0

    def test_choice_format(self) -> None:
        """Text answers are the survey's and decode to levels 1..5."""
        ema = generate(small(ema_format="choice")).ema
        assert list(ema.columns) == ["user_id", "timestamp", "choice"]
        assert set(ema["choice"]) <= set(EMA_CHOICES)
        assert {response_to_level(c) for c in ema["choice"]} <= {1, 2, 3, 4, 5}

    def test_levels_in_range(self) -> None:
        """Even a noisy, high-baseline cohort answers within 1..5."""
        ema = generate(small(noise=3.0, signal=SignalSpec(baseline=6.0))).ema
        assert ema["level"].between(1, 5).all()
