"""Unit tests for per-user standardisation, term thirds and the record join."""

import datetime as dt

import numpy as np
import pytest
from pydantic import ValidationError

from mobility_stress.dataset import (
    FEATURE_NAMES,
    DayRecord,
    TermCalendar,
    assemble,
    records_to_arrays,
    standardize_per_user,
    temporal_onehots,
    zscore_columns,
)
from mobility_stress.exceptions import DateOutOfTerm
from mobility_stress.features import MobilityVector
from mobility_stress.labels import DayLabel, StressClass
from tests.utils import TERM_START, make_records

def day(k: int) -> dt.date:
    return TERM_START + dt.timedelta(days=k)


CAL = TermCalendar(first_day=TERM_START, last_day=day(62))


def vector(total: float = 100.0, tile_diff=None, cluster_diff=None) -> MobilityVector:
    return MobilityVector(
        total_distance_m=total,
        max_displacement_m=50.0,
        distance_stddev_m=10.0,
        distinct_tiles=2,
        hull_area_m2=400.0,
        tile_seq_diff=tile_diff,
        cluster_seq_diff=cluster_diff,
        distance_entropy_nats=0.5,
    )


def label(user: str, k: int, cls: StressClass = StressClass.MEDIAN) -> DayLabel:
    date = day(k)
    return DayLabel(user_id=user, date=date, daily_mean=3.0, stress_class=cls)


def record(features: tuple) -> DayRecord:
    return DayRecord(
        user_id="a", date=TERM_START, features=features, label=StressClass.MEDIAN
    )


class TestStandardize:
    """Test per-user z-scoring."""

    def test_constant_user_is_all_zero(self) -> None:
        """Identical vectors every day standardise to zeros."""
        rows = {("a", day(k)): vector(tile_diff=1, cluster_diff=1) for k in range(4)}
        out = standardize_per_user(rows)
        assert all(np.array_equal(v, np.zeros(8)) for v in out.values())

    def test_two_point_zscore(self) -> None:
        """Values [1, 3] become [-1, +1] under the population std."""
        rows = {("a", TERM_START): vector(total=1.0), ("a", day(1)): vector(total=3.0)}
        out = standardize_per_user(rows)
        assert out[("a", TERM_START)][0] == pytest.approx(-1.0)
        assert out[("a", day(1))][0] == pytest.approx(1.0)

    def test_missing_differences_become_zero(self) -> None:
        """First-day gaps are imputed with the user's mean, hence 0."""
        rows = {
            ("a", TERM_START): vector(),
            ("a", day(1)): vector(tile_diff=2, cluster_diff=0),
            ("a", day(2)): vector(tile_diff=4, cluster_diff=2),
        }
        out = standardize_per_user(rows)
        assert out[("a", TERM_START)][5] == 0.0
        assert out[("a", TERM_START)][6] == 0.0
        assert np.all(np.isfinite(np.vstack(list(out.values()))))

    def test_users_scaled_independently(self) -> None:
        """Each user gets mean 0 and variance 1 on a varying column."""
        rng = np.random.default_rng(0)
        rows = {}
        for user, scale in (("a", 1.0), ("b", 1000.0)):
            for k in range(10):
                rows[(user, day(k))] = vector(total=float(rng.uniform(0, scale)))
        out = standardize_per_user(rows)
        for user in ("a", "b"):
            col = np.array([v[0] for (u, _), v in out.items() if u == user])
            assert col.mean() == pytest.approx(0.0, abs=1e-12)
            assert col.std() == pytest.approx(1.0, rel=1e-12)

    def test_idempotent(self) -> None:
        """Z-scoring a z-scored table changes nothing."""
        values = np.random.default_rng(1).normal(5.0, 3.0, size=(20, 8))
        once = zscore_columns(values)
        np.testing.assert_allclose(zscore_columns(once), once, atol=1e-9)

    def test_rejects_non_matrix(self) -> None:
        """Only 2-d input is accepted."""
        with pytest.raises(ValueError, match="2-d"):
            zscore_columns(np.zeros(3))


class TestTemporal:
    """Test weekend and term-third bits."""

    def test_saturday_in_first_third(self) -> None:
        """2013-03-30 is a Saturday early in the term."""
        assert temporal_onehots(dt.date(2013, 3, 30), CAL) == (1, 1, 0, 0)

    def test_wednesday_mid_term(self) -> None:
        """Four weeks into a 63-day term is mid-term."""
        date = day(28)
        assert date.weekday() == 2
        assert temporal_onehots(date, CAL) == (0, 0, 1, 0)

    def test_thirds_cover_the_term(self) -> None:
        """Every day has exactly one third bit; a 63-day term splits 21/21/21."""
        counts = [0, 0, 0]
        for k in range(CAL.n_days):
            bits = temporal_onehots(day(k), CAL)[1:]
            assert sum(bits) == 1
            counts[bits.index(1)] += 1
        assert counts == [21, 21, 21]

    def test_remainder_days_go_early(self) -> None:
        """Eleven days split 4/4/3."""
        cal = TermCalendar(first_day=TERM_START, last_day=day(10))
        assert cal.third_sizes() == (4, 4, 3)

    def test_out_of_term(self) -> None:
        """Dates outside the calendar raise DateOutOfTerm."""
        with pytest.raises(DateOutOfTerm):
            temporal_onehots(day(-1), CAL)

    def test_calendar_order(self) -> None:
        """The first day cannot follow the last."""
        with pytest.raises(ValidationError):
            TermCalendar(first_day=CAL.last_day, last_day=CAL.first_day)


class TestAssemble:
    """Test the inner join of features and labels."""

    def test_disjoint_keys(self) -> None:
        """No shared user-day gives no records."""
        features = {("a", TERM_START): np.zeros(8)}
        assert assemble(features, [label("b", 0)], CAL) == []

    def test_overlap_only(self) -> None:
        """Five feature days and three label days sharing two give two records."""
        features = {("a", day(k)): np.full(8, float(k)) for k in range(5)}
        labels = [label("a", 3), label("a", 1), label("a", 9)]
        records = assemble(features, labels, CAL)
        assert [r.date for r in records] == [day(1), day(3)]
        assert records[1].features[:8] == (3.0,) * 8

    def test_sorted_by_user_then_date(self) -> None:
        """Output order is (user_id, date) whatever the label order."""
        features = {(u, day(k)): np.zeros(8) for u in "ba" for k in range(3)}
        labels = [label(u, k) for k in (2, 0, 1) for u in "ab"]
        records = assemble(features, labels, CAL)
        keys = [(r.user_id, r.date) for r in records]
        assert keys == sorted(keys)
        assert len(records) == 6

    def test_out_of_term_days_dropped(self) -> None:
        """A labeled day after the term is not a record."""
        features = {("a", CAL.last_day + dt.timedelta(days=1)): np.zeros(8)}
        assert assemble(features, [label("a", 63)], CAL) == []


class TestDayRecord:
    """Test record validation and array conversion."""

    def test_rejects_wrong_width(self) -> None:
        """Records hold exactly twelve features."""
        with pytest.raises(ValidationError, match="12 features"):
            record((0.0,) * 11)

    def test_rejects_two_thirds(self) -> None:
        """Exactly one term-third bit is set."""
        with pytest.raises(ValidationError, match="term-third"):
            record((0.0,) * 9 + (1.0, 1.0, 0.0))

    def test_rejects_non_finite(self) -> None:
        """NaN features are refused."""
        with pytest.raises(ValidationError, match="finite"):
            record((np.nan,) + (0.0,) * 8 + (1.0, 0.0, 0.0))

    def test_arrays_and_subsets(self) -> None:
        """Feature columns can be selected by index."""
        records = make_records(np.arange(24, dtype=float).reshape(3, 8), [0, 1, 2])
        x, y = records_to_arrays(records)
        assert x.shape == (3, len(FEATURE_NAMES))
        assert y.tolist() == [0, 1, 2]
        x_gps, _ = records_to_arrays(records, range(8))
        np.testing.assert_array_equal(x_gps, np.arange(24, dtype=float).reshape(3, 8))

    def test_empty_arrays(self) -> None:
        """No records still give correctly shaped arrays."""
        x, y = records_to_arrays([], [8, 9])
        assert x.shape == (0, 2)
        assert y.shape == (0,)
