"""Liquidity fragmentation statistics and liquidity-unification detection over transfer logs.

Log format, one record per line::

    <timestamp> <chain> <token> <address> <IN|OUT> <amount>

A unification event is anchored at an OUT record on chain ``c`` when the same
(user, token) has an earlier IN on ``c`` (any time before) and at least one OUT on
another chain inside the half-open window ``[t - window, t)``.
"""

from __future__ import annotations

import enum
import random
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .core import address_from_int, is_address
from .errors import InvalidValue, ParseError, UnsortedLog

DEFAULT_WINDOW = 7200


class Direction(enum.Enum):
    IN = "IN"
    OUT = "OUT"


@dataclass(frozen=True)
class TransferRecord:
    timestamp: int
    chain: str
    token: str
    user: str
    direction: Direction
    amount: int

    def to_line(self) -> str:
        return (
            f"{self.timestamp} {self.chain} {self.token} {self.user} "
            f"{self.direction.value} {self.amount}"
        )


@dataclass(frozen=True)
class UnificationEvent:
    anchor: int  # index of the OUT record in the log
    user: str
    token: str
    chain: str
    prior_ins: tuple[int, ...]
    cross_outs: tuple[int, ...]

    @property
    def supporting(self) -> tuple[int, ...]:
        return tuple(sorted(self.prior_ins + self.cross_outs))

    def to_line(self) -> str:
        support = ",".join(map(str, self.supporting))
        return (
            f"EVENT anchor={self.anchor} user={self.user} token={self.token} "
            f"chain={self.chain} support={support}"
        )


@dataclass
class HoldingSnapshot:
    universe: frozenset[str]
    holdings: dict[tuple[str, str], frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, chains in self.holdings.items():
            extra = set(chains) - self.universe
            if extra:
                raise InvalidValue(f"{key}: chains {sorted(extra)} outside universe")


# -- parsing --------------------------------------------------------------------


def parse_log(text: str) -> list[TransferRecord]:
    records = []
    last = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ParseError(lineno, f"expected 6 fields, got {len(parts)}")
        ts, chain, token, user, direction, amount = parts
        try:
            ts_i, amount_i = int(ts), int(amount)
        except ValueError:
            raise ParseError(lineno, "timestamp and amount must be integers") from None
        if amount_i < 0:
            raise ParseError(lineno, "negative amount")
        if direction not in ("IN", "OUT"):
            raise ParseError(lineno, f"direction must be IN or OUT, got {direction!r}")
        if not is_address(user):
            raise ParseError(lineno, f"malformed address {user!r}")
        if last is not None and ts_i < last:
            raise UnsortedLog(lineno, f"timestamp {ts_i} before {last}")
        last = ts_i
        records.append(
            TransferRecord(ts_i, chain, token, user.lower(), Direction(direction), amount_i)
        )
    return records


def load_log(path: str | Path) -> list[TransferRecord]:
    return parse_log(Path(path).read_text())


# -- fragmentation ----------------------------------------------------------------


def fragmentation_stats(snapshot: HoldingSnapshot) -> dict[tuple[str, int], int]:
    """Count users per (token, k) holding the token on exactly k chains."""
    stats: Counter = Counter()
    for (token, _user), chains in snapshot.holdings.items():
        if chains:
            stats[(token, len(chains))] += 1
    return dict(sorted(stats.items()))


def multi_chain_totals(stats: dict[tuple[str, int], int]) -> dict[str, int]:
    """Per token, users holding on two or more chains."""
    totals: Counter = Counter()
    for (token, k), count in stats.items():
        totals[token] += count if k >= 2 else 0
    return dict(sorted(totals.items()))


def snapshot_from_log(records: Iterable[TransferRecord]) -> HoldingSnapshot:
    """Net IN minus OUT per (token, user, chain); chains with a positive net count as held."""
    net: Counter = Counter()
    universe = set()
    for r in records:
        universe.add(r.chain)
        sign = 1 if r.direction is Direction.IN else -1
        net[(r.token, r.user, r.chain)] += sign * r.amount
    holdings: dict[tuple[str, str], set[str]] = defaultdict(set)
    for (token, user, chain), value in net.items():
        if value > 0:
            holdings[(token, user)].add(chain)
    return HoldingSnapshot(
        frozenset(universe), {k: frozenset(v) for k, v in sorted(holdings.items())}
    )


# -- unification detection -------------------------------------------------------


def _check_sorted(log: Sequence[TransferRecord]) -> None:
    for i in range(1, len(log)):
        if log[i].timestamp < log[i - 1].timestamp:
            raise UnsortedLog(i + 1, f"timestamp {log[i].timestamp} before {log[i - 1].timestamp}")


def detect_unification(
    log: Sequence[TransferRecord], window_seconds: int = DEFAULT_WINDOW
) -> list[UnificationEvent]:
    if window_seconds <= 0:
        raise InvalidValue("window_seconds must be positive")
    _check_sorted(log)
    ins: dict[tuple[str, str], dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    recent_outs: dict[tuple[str, str], deque[int]] = defaultdict(deque)
    events = []
    for idx, r in enumerate(log):
        key = (r.user, r.token)
        if r.direction is Direction.IN:
            ins[key][r.chain].append(idx)
            continue
        outs = recent_outs[key]
        # timestamps never decrease, so records that left the window stay out
        while outs and log[outs[0]].timestamp < r.timestamp - window_seconds:
            outs.popleft()
        prior_ins = ins[key].get(r.chain, [])
        cross = [j for j in outs if log[j].chain != r.chain and log[j].timestamp < r.timestamp]
        if prior_ins and cross:
            events.append(
                UnificationEvent(idx, r.user, r.token, r.chain, tuple(prior_ins), tuple(cross))
            )
        outs.append(idx)
    return events


def unification_fraction(log: Sequence[TransferRecord], events: Sequence) -> Fraction:
    """Share of log records that anchor a unification event."""
    if not log:
        return Fraction(0)
    return Fraction(len(events), len(log))


# -- synthetic logs with a planted rate ---------------------------------------------


def planted_log(
    seed: int,
    planted: int,
    decoys: int,
    chains: Sequence[str] = ("arbitrum", "optimism", "zksync"),
    tokens: Sequence[str] = ("USDT", "USDC", "wETH"),
    window_seconds: int = DEFAULT_WINDOW,
) -> tuple[list[TransferRecord], int]:
    """Build a sorted log containing exactly ``planted`` unification anchors.

    Each planted pattern (OUT on chain a, IN on chain b, OUT on chain b inside the
    window) and each decoy uses its own user, so patterns cannot interact. Decoys
    are near misses: the cross-chain OUT falls just outside the window, the IN is
    missing, or the IN sits on the wrong chain. Returns the log and the planted count.
    """
    if len(chains) < 2:
        raise InvalidValue("need at least two chains")
    rng = random.Random(seed)
    timed: list[tuple[int, int, TransferRecord]] = []
    user_no = 0

    def add(ts: int, chain: str, token: str, user: str, d: Direction) -> None:
        record = TransferRecord(ts, chain, token, user, d, rng.randint(1, 10**6))
        timed.append((ts, len(timed), record))

    horizon = 10 * window_seconds * max(1, planted + decoys)
    kinds = ["planted"] * planted + [rng.choice(("late", "no_in", "wrong_in")) for _ in range(decoys)]
    rng.shuffle(kinds)
    for kind in kinds:
        user_no += 1
        user = address_from_int(0xA0000 + user_no)
        token = rng.choice(tokens)
        a, b = rng.sample(list(chains), 2)
        t0 = rng.randint(0, horizon)
        if kind == "planted":
            lag = rng.randint(1, window_seconds)
            add(t0, a, token, user, Direction.OUT)
            add(t0 + rng.randint(0, lag - 1), b, token, user, Direction.IN)
            add(t0 + lag, b, token, user, Direction.OUT)
        elif kind == "late":
            lag = window_seconds + rng.randint(1, window_seconds)
            add(t0, a, token, user, Direction.OUT)
            add(t0 + 1, b, token, user, Direction.IN)
            add(t0 + lag, b, token, user, Direction.OUT)
        elif kind == "no_in":
            add(t0, a, token, user, Direction.OUT)
            add(t0 + rng.randint(1, max(1, window_seconds - 1)), b, token, user, Direction.OUT)
        else:
            add(t0, a, token, user, Direction.OUT)
            add(t0 + 1, a, token, user, Direction.IN)
            add(t0 + 2, b, token, user, Direction.OUT)
    timed.sort(key=lambda x: (x[0], x[1]))
    return [r for _, _, r in timed], planted
