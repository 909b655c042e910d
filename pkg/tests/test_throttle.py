import random

import pytest
from hypothesis import given, strategies as st

from pvbpp.errors import ClockSkew, InvalidAttempt
from pvbpp.throttle import (
    DelayPolicy,
    PolicyKind,
    cumulative_lockout,
    delay_exponential,
    delay_timestamp,
)

EXP = DelayPolicy()
UNCAPPED = DelayPolicy(cap_exponent=64)
TS = DelayPolicy(kind=PolicyKind.TIMESTAMP)


def lockout_oracle(attempts, base=2):
    """Wait before attempt a is base**a; attempt 1 waits nothing."""
    total = 0
    a = 2
    while a <= attempts:
        total += base**a
        a += 1
    return total


def test_first_two_delays():
    assert delay_exponential(1, EXP) == 2
    assert delay_exponential(2, EXP) == 4


def test_cap_saturation():
    assert delay_exponential(25, EXP) == 2**20 == 1_048_576


@pytest.mark.parametrize("n", [0, -3])
def test_exponential_rejects_bad_attempt(n):
    with pytest.raises(InvalidAttempt):
        delay_exponential(n, EXP)


@pytest.mark.parametrize("base", [2.0, 3.0, 1.5])
def test_doubling_below_cap_and_flat_above(base):
    p = DelayPolicy(base=base, cap_exponent=12)
    for n in range(1, 12):
        assert delay_exponential(n + 1, p) == pytest.approx(base * delay_exponential(n, p))
    assert {delay_exponential(n, p) for n in range(12, 40)} == {base**12}


def test_timestamp_examples():
    assert delay_timestamp(100, 100, 1, TS) == 0
    assert delay_timestamp(100, 103, 1, TS) == 6
    assert delay_timestamp(100, 100, 3, DelayPolicy(kind=PolicyKind.TIMESTAMP, min_delay=1.5)) == 1.5


def test_timestamp_clock_skew():
    with pytest.raises(ClockSkew):
        delay_timestamp(10, 9, 1, TS)


def test_timestamp_monotone_random_pairs():
    rng = random.Random(2)
    for _ in range(1000):
        i1, i2 = sorted(rng.uniform(0, 500) for _ in range(2))
        n = rng.randint(1, 30)
        assert delay_timestamp(0, i2, n, TS) >= delay_timestamp(0, i1, n, TS)
        n1, n2 = sorted(rng.randint(1, 40) for _ in range(2))
        assert delay_timestamp(0, i1, n2, TS) >= delay_timestamp(0, i1, n1, TS)


@pytest.mark.parametrize("attempts,expected", [(1, 0), (2, 4), (10, 2044)])
def test_cumulative_lockout_examples(attempts, expected):
    assert cumulative_lockout(attempts, UNCAPPED) == expected


def test_cumulative_lockout_matches_oracle_and_closed_form():
    for d in range(1, 31):
        assert cumulative_lockout(d, UNCAPPED) == lockout_oracle(d)
        assert lockout_oracle(d) == 2 ** (d + 1) - 4


def test_cumulative_lockout_rejects_zero():
    with pytest.raises(InvalidAttempt):
        cumulative_lockout(0)


@pytest.mark.parametrize("kwargs", [dict(base=1), dict(base=0.5), dict(cap_exponent=0), dict(alpha=0),
                                    dict(min_delay=-1)])
def test_policy_validation(kwargs):
    with pytest.raises(ValueError):
        DelayPolicy(**kwargs)


@pytest.mark.parametrize("text,expected", [
    ("exp:2", DelayPolicy()),
    ("exp:2:cap20", DelayPolicy()),
    ("exp:4:cap10", DelayPolicy(base=4, cap_exponent=10)),
    ("ts:2:alpha0.5:min1", DelayPolicy(kind=PolicyKind.TIMESTAMP, alpha=0.5, min_delay=1)),
    ("none", DelayPolicy(kind=PolicyKind.NONE)),
])
def test_parse(text, expected):
    assert DelayPolicy.parse(text) == expected


@pytest.mark.parametrize("text", ["", "linear:2", "exp:two", "exp:2:capX"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        DelayPolicy.parse(text)


def test_label_roundtrip():
    for p in (DelayPolicy(), DelayPolicy(base=3, cap_exponent=7), TS, DelayPolicy.unthrottled()):
        assert DelayPolicy.parse(p.label()) == p


def test_from_config_overrides_default():
    cfg = {"policy.kind": "timestamp", "policy.base": "3", "policy.cap_exponent": "5",
           "policy.alpha": "0.25", "policy.min_delay": "2"}
    assert DelayPolicy.from_config(cfg) == DelayPolicy(PolicyKind.TIMESTAMP, 3.0, 5, 0.25, 2.0)
    assert DelayPolicy.from_config({}, DelayPolicy(base=4)) == DelayPolicy(base=4)


def test_unthrottled_policy_is_zero():
    p = DelayPolicy.unthrottled()
    assert all(p.delay(n) == 0 for n in range(1, 50))


@given(st.integers(1, 200), st.floats(1.01, 10), st.integers(1, 60))
def test_exponential_is_capped_power(n, base, cap):
    p = DelayPolicy(base=base, cap_exponent=cap)
    assert delay_exponential(n, p) == base ** min(n, cap)
