import math

import pytest
from hypothesis import given, strategies as st

from mtwf.traffic import (
    BurstyServiceSpec,
    DirectionTraffic,
    InstabilityError,
    departure_rate,
    equivalent_arrival_rate,
    mm1_delay,
    required_rate,
    sum_rate_constraint,
)


@pytest.mark.parametrize(
    "lam, t, big_lam, expected",
    [(0.0, 2.0, 0.5, 0.0), (10.0, 2.0, 0.5, 5.0), (6.0, 1.0, 1.0, 3.0)],
)
def test_equivalent_rate_examples(lam, t, big_lam, expected):
    assert equivalent_arrival_rate(lam, t, big_lam) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("t, big_lam", [(0.0, 1.0), (1.0, 0.0), (math.inf, 1.0), (1.0, math.nan), (-1.0, 1.0)])
def test_equivalent_rate_rejects_bad_domain(t, big_lam):
    with pytest.raises(ValueError):
        equivalent_arrival_rate(1.0, t, big_lam)


def test_equivalent_rate_rejects_negative_packet_rate():
    with pytest.raises(ValueError):
        equivalent_arrival_rate(-1.0, 1.0, 1.0)


pos = st.floats(1e-3, 1e3)


@given(lam=st.floats(0, 1e3), t=pos, big_lam=pos, bump=st.floats(1.0, 10.0))
def test_equivalent_rate_bounded_and_monotone(lam, t, big_lam, bump):
    base = equivalent_arrival_rate(lam, t, big_lam)
    assert 0.0 <= base <= lam * (1 + 1e-15)
    assert equivalent_arrival_rate(lam * bump, t, big_lam) >= base
    assert equivalent_arrival_rate(lam, t * bump, big_lam) >= base * (1 - 1e-15)
    assert equivalent_arrival_rate(lam, t, big_lam * bump) >= base * (1 - 1e-15)


@pytest.mark.parametrize(
    "length, delay, lam_eq, expected",
    [(1000.0, 0.1, 5.0, 15000.0), (1000.0, 0.1, 0.0, 10000.0), (500.0, 0.05, 4.0, 12000.0)],
)
def test_required_rate_examples(length, delay, lam_eq, expected):
    assert required_rate(length, delay, lam_eq) == pytest.approx(expected, rel=1e-12)


def test_sum_rate_constraint_per_direction():
    # lam* = 5 down, 3 up
    spec = BurstyServiceSpec(
        service_id=3,
        max_delay=0.1,
        downlink=DirectionTraffic(burst_rate=0.5, burst_duration=2.0, packet_rate=10.0, packet_length=1000.0),
        uplink=DirectionTraffic(burst_rate=1.0, burst_duration=1.0, packet_rate=6.0, packet_length=500.0),
    )
    req = sum_rate_constraint(spec)
    assert req.service_id == 3
    assert req.equivalent_rate_down == pytest.approx(5.0)
    assert req.equivalent_rate_up == pytest.approx(3.0)
    assert req.rate_down == pytest.approx(15000.0)
    assert req.rate_up == pytest.approx(500 / 0.1 + 3 * 500)


def test_mm1_delay_examples():
    assert mm1_delay(20000.0, 1000.0, 5.0) == pytest.approx(1 / 15, rel=1e-14)
    with pytest.raises(InstabilityError):
        mm1_delay(1000.0, 1000.0, 1.0)
    with pytest.raises(InstabilityError):
        mm1_delay(1000.0, 1000.0, 1.0 - 1e-12)
    with pytest.raises(InstabilityError):
        mm1_delay(500.0, 1000.0, 1.0)


# lam* * D is kept below ~1e3 so R/L - lam* = 1/D is not swamped by cancellation
@given(
    length=st.floats(1.0, 1e5),
    delay=st.floats(1e-3, 10.0),
    packet_rate=st.floats(0.0, 100.0),
    t=st.floats(1e-2, 1e2),
    big_lam=st.floats(1e-2, 1e2),
)
def test_delay_round_trip(length, delay, packet_rate, t, big_lam):
    traffic = DirectionTraffic(big_lam, t, packet_rate, length)
    spec = BurstyServiceSpec(0, delay, traffic, traffic)
    req = sum_rate_constraint(spec)
    got = mm1_delay(req.rate_down, length, req.equivalent_rate_down)
    assert abs(got - delay) / delay <= 1e-12


@given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=20), st.floats(1.0, 1e4))
def test_departure_rate_is_additive(rates, length):
    whole = departure_rate(rates, length)
    split = departure_rate(rates[: len(rates) // 2], length) + departure_rate(rates[len(rates) // 2:], length)
    assert whole == pytest.approx(split, rel=1e-12, abs=1e-12)
    assert whole == pytest.approx(sum(rates) / length, rel=1e-12, abs=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        DirectionTraffic(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        DirectionTraffic(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        DirectionTraffic(1.0, 1.0, -1.0, 1.0)
    good = DirectionTraffic(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        BurstyServiceSpec(0, 0.0, good, good)
