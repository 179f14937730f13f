import math
from datetime import date, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spreadcast.calendar_features import (
    CalendarFeatures,
    cyclical_encode,
    day_features,
    load_holidays,
    nerc_holidays,
)

dates_2023_2024 = st.dates(min_value=date(2023, 1, 1), max_value=date(2024, 12, 31))


@pytest.mark.parametrize(
    "value, period, expected",
    [(0, 12, (0.0, 1.0)), (3, 12, (1.0, 0.0)), (6, 12, (0.0, -1.0))],
)
def test_cyclical_encode_anchors(value, period, expected):
    s, c = cyclical_encode(value, period)
    assert s == pytest.approx(expected[0], abs=1e-12)
    assert c == pytest.approx(expected[1], abs=1e-12)


@pytest.mark.parametrize("period", [0, -3])
def test_cyclical_encode_rejects_bad_period(period):
    with pytest.raises(ValueError):
        cyclical_encode(1, period)


def test_new_year_2024():
    f = day_features(date(2024, 1, 1), nerc_holidays([2024]))
    assert f.holiday_flag == 1
    assert f.year_scaled == 1.0


def test_monday_encoding():
    f = day_features(date(2023, 7, 3))
    assert f.dow_sin == pytest.approx(0.0, abs=1e-12)
    assert f.dow_cos == pytest.approx(1.0)


def test_month_and_dom_periods():
    f = day_features(date(2023, 3, 31))
    assert (f.month_sin, f.month_cos) == pytest.approx(cyclical_encode(3, 12))
    assert (f.dom_sin, f.dom_cos) == pytest.approx(cyclical_encode(31, 31))


def test_nerc_calendar_2023_and_2024():
    assert nerc_holidays([2023]) == {
        date(2023, 1, 2),  # Jan 1 is a Sunday
        date(2023, 5, 29),
        date(2023, 7, 4),
        date(2023, 9, 4),
        date(2023, 11, 23),
        date(2023, 12, 25),
    }
    assert nerc_holidays([2024]) == {
        date(2024, 1, 1),
        date(2024, 5, 27),
        date(2024, 7, 4),
        date(2024, 9, 2),
        date(2024, 11, 28),
        date(2024, 12, 25),
    }


def test_custom_holiday_file(tmp_path):
    p = tmp_path / "hol.txt"
    p.write_text("# company days\n2024-02-19\n\n2024-03-29\n")
    hol = load_holidays(p)
    assert day_features(date(2024, 2, 19), hol).holiday_flag == 1
    assert day_features(date(2024, 1, 1), hol).holiday_flag == 0


@given(dates_2023_2024)
def test_week_periodicity(d):
    a, b = day_features(d), day_features(d + timedelta(days=7))
    assert a.dow_sin == pytest.approx(b.dow_sin, abs=1e-12)
    assert a.dow_cos == pytest.approx(b.dow_cos, abs=1e-12)


@given(dates_2023_2024)
def test_pairs_on_unit_circle_and_bounded(d):
    f = day_features(d)
    for s, c in ((f.month_sin, f.month_cos), (f.dom_sin, f.dom_cos), (f.dow_sin, f.dow_cos)):
        assert abs(s * s + c * c - 1.0) < 1e-9
    assert f.holiday_flag in (0, 1)
    assert all(-1.0 <= v <= 1.0 for v in f.as_array())


@given(st.dates(min_value=date(2023, 1, 1), max_value=date(2023, 12, 31)))
def test_same_month_next_year_shares_month_encoding(d):
    nxt = date(2024, d.month, min(d.day, 28))
    assert day_features(d).month_sin == pytest.approx(day_features(nxt).month_sin, abs=1e-12)
    assert day_features(d).month_cos == pytest.approx(day_features(nxt).month_cos, abs=1e-12)


def test_feature_vector_order():
    f = day_features(date(2024, 7, 4))
    arr = f.as_array()
    assert arr.shape == (8,)
    assert arr[0] == 1 and arr[1] == 1
    assert math.isclose(arr[2], f.month_sin) and math.isclose(arr[7], f.dow_cos)
    assert isinstance(f, CalendarFeatures)
