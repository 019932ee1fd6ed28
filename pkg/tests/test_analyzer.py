import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_detect
from uat20.analyzer import (
    Direction,
    HoldingSnapshot,
    TransferRecord,
    detect_unification,
    fragmentation_stats,
    multi_chain_totals,
    parse_log,
    planted_log,
    snapshot_from_log,
    unification_fraction,
)
from uat20.core import address_from_int
from uat20.errors import InvalidValue, ParseError, UnsortedLog

U1, U2 = address_from_int(1), address_from_int(2)
IN, OUT = Direction.IN, Direction.OUT


def rec(ts, chain, d, user=U1, token="T", amount=1):
    return TransferRecord(ts, chain, token, user, d, amount)


def random_log(rng, size):
    ts = 0
    out = []
    for _ in range(size):
        ts += rng.choice([0, 0, 1, 60, 600, 3600, 9000])
        out.append(
            TransferRecord(
                ts,
                rng.choice("ABC"),
                rng.choice(["USDT", "wETH"]),
                rng.choice([U1, U2]),
                rng.choice([IN, OUT]),
                rng.randint(1, 100),
            )
        )
    return out


def as_pairs(events):
    return [(e.anchor, e.supporting) for e in events]


# -- fragmentation -----------------------------------------------------------------


def test_fragmentation_counts():
    snap = HoldingSnapshot(
        frozenset("ABC"),
        {
            ("USDT", "u1"): frozenset("AB"),
            ("USDT", "u2"): frozenset("A"),
            ("wETH", "u1"): frozenset("ABC"),
        },
    )
    stats = fragmentation_stats(snap)
    assert stats == {("USDT", 1): 1, ("USDT", 2): 1, ("wETH", 3): 1}
    assert multi_chain_totals(stats) == {"USDT": 1, "wETH": 1}


def test_fragmentation_empty_and_singleton():
    assert fragmentation_stats(HoldingSnapshot(frozenset())) == {}
    stats = fragmentation_stats(HoldingSnapshot(frozenset("A"), {("T", "u"): frozenset("A")}))
    assert stats == {("T", 1): 1}
    assert multi_chain_totals(stats) == {"T": 0}


def test_snapshot_universe_enforced():
    with pytest.raises(InvalidValue):
        HoldingSnapshot(frozenset("A"), {("T", "u"): frozenset("AB")})


@given(st.dictionaries(st.tuples(st.sampled_from("XYZ"), st.text("uv", min_size=1, max_size=2)),
                       st.frozensets(st.sampled_from("ABCD"))))
def test_fragmentation_matches_brute_count(holdings):
    stats = fragmentation_stats(HoldingSnapshot(frozenset("ABCD"), holdings))
    for token in "XYZ":
        for k in range(1, 5):
            expected = sum(1 for (t, _), c in holdings.items() if t == token and len(c) == k)
            assert stats.get((token, k), 0) == expected


def test_snapshot_from_log_nets_flows():
    log = [rec(0, "A", IN, amount=5), rec(1, "B", IN, amount=3), rec(2, "B", OUT, amount=3)]
    snap = snapshot_from_log(log)
    assert snap.holdings == {("T", U1): frozenset("A")}
    assert snap.universe == frozenset("AB")


# -- detection -----------------------------------------------------------------------


def test_basic_pattern():
    log = [rec(0, "A", OUT), rec(100, "B", IN), rec(200, "B", OUT)]
    events = detect_unification(log)
    assert as_pairs(events) == [(2, (0, 1))]
    assert events[0].chain == "B" and events[0].prior_ins == (1,) and events[0].cross_outs == (0,)


def test_window_boundary():
    far = [rec(-7300, "A", OUT), rec(-100, "B", IN), rec(0, "B", OUT)]
    assert detect_unification(far) == []
    edge = [rec(-7200, "A", OUT), rec(-100, "B", IN), rec(0, "B", OUT)]
    assert len(detect_unification(edge)) == 1
    simultaneous = [rec(0, "A", OUT), rec(0, "B", IN), rec(0, "B", OUT)]
    assert detect_unification(simultaneous) == []


def test_in_leg_has_no_window():
    log = [rec(0, "B", IN), rec(50_000, "A", OUT), rec(50_100, "B", OUT)]
    assert len(detect_unification(log)) == 1


def test_only_ins_and_other_users():
    assert detect_unification([rec(i, "A", IN) for i in range(5)]) == []
    log = [rec(0, "A", OUT, user=U2), rec(1, "B", IN), rec(2, "B", OUT)]
    assert detect_unification(log) == []
    log = [rec(0, "A", OUT, token="X"), rec(1, "B", IN), rec(2, "B", OUT)]
    assert detect_unification(log) == []


def test_unsorted_and_bad_window():
    with pytest.raises(UnsortedLog):
        detect_unification([rec(5, "A", IN), rec(4, "A", IN)])
    with pytest.raises(InvalidValue):
        detect_unification([], window_seconds=0)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 200), st.sampled_from([60, 3600, 7200]))
def test_matches_brute_force(rnd, size, window):
    log = random_log(rnd, size)
    assert as_pairs(detect_unification(log, window)) == brute_detect(log, window)


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 120), st.integers(1, 20000), st.integers(0, 20000))
def test_window_monotonic(rnd, size, w, extra):
    log = random_log(rnd, size)
    small = {e.anchor for e in detect_unification(log, w)}
    large = {e.anchor for e in detect_unification(log, w + extra)}
    assert small <= large


@pytest.mark.parametrize("seed", range(5))
def test_planted_rate_recovered_exactly(seed):
    log, planted = planted_log(seed, planted=37, decoys=262)
    events = detect_unification(log)
    assert len(events) == planted
    assert unification_fraction(log, events) == Fraction(37, len(log))
    assert as_pairs(events) == brute_detect(log, 7200)


# -- parsing -------------------------------------------------------------------------


def test_parse_log_round_trip():
    rng = random.Random(3)
    log = random_log(rng, 50)
    text = "# header\n" + "\n".join(r.to_line() for r in log) + "\n"
    assert parse_log(text) == log


@pytest.mark.parametrize(
    "text, exc, lineno",
    [
        (f"5 A T {U1} IN 1\n4 A T {U1} IN 1\n", UnsortedLog, 2),
        (f"5 A T {U1} SIDEWAYS 1\n", ParseError, 1),
        ("5 A T nope IN 1\n", ParseError, 1),
        (f"5 A T {U1} IN\n", ParseError, 1),
        (f"x A T {U1} IN 1\n", ParseError, 1),
    ],
)
def test_parse_log_errors(text, exc, lineno):
    with pytest.raises(exc) as err:
        parse_log(text)
    assert err.value.lineno == lineno
