"""Scenario model and the line-oriented scenario file format.

    ROLLUPS <n>
    GENESIS <rollup> <address> <amount>
    POLICY <address> <id,id,...>
    EPOCH
    E20XFER <rollup> <from> <to> <amount>
    E20APPROVE <rollup> <owner> <spender> <amount>
    E20XFERFROM <rollup> <spender> <owner> <to> <amount>
    U20XFER / U20APPROVE / U20XFERFROM   same shapes, UAT20 token

``#`` starts a comment; blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .core import check_amount, is_address
from .errors import InvalidValue, ParseError
from .upsilon20 import DeductionPolicy

# verb -> number of address arguments
VERBS = {
    "E20XFER": 2,
    "E20APPROVE": 2,
    "E20XFERFROM": 3,
    "U20XFER": 2,
    "U20APPROVE": 2,
    "U20XFERFROM": 3,
}


@dataclass(frozen=True)
class Action:
    rollup: int
    verb: str
    parties: tuple[str, ...]
    amount: int

    def to_line(self) -> str:
        return " ".join([self.verb, str(self.rollup), *self.parties, str(self.amount)])


@dataclass
class Scenario:
    n: int
    genesis: list[tuple[int, str, int]] = field(default_factory=list)
    policies: list[DeductionPolicy] = field(default_factory=list)
    epochs: list[list[Action]] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"ROLLUPS {self.n}"]
        lines += [f"GENESIS {r} {a} {v}" for r, a, v in self.genesis]
        lines += [f"POLICY {p.owner} {','.join(map(str, p.priority))}" for p in self.policies]
        for actions in self.epochs:
            lines.append("EPOCH")
            lines += [a.to_line() for a in actions]
        return "\n".join(lines) + "\n"


def _int(token: str, lineno: int, what: str) -> int:
    try:
        value = int(token, 10)
    except ValueError:
        raise ParseError(lineno, f"{what} must be an integer, got {token!r}") from None
    return value


def _addr(token: str, lineno: int) -> str:
    if not is_address(token):
        raise ParseError(lineno, f"malformed address {token!r}")
    return token.lower()


def _amount(token: str, lineno: int) -> int:
    try:
        return check_amount(_int(token, lineno, "amount"))
    except InvalidValue as exc:
        raise ParseError(lineno, exc.detail) from None


def parse_scenario(text: str) -> Scenario:
    n = None
    scenario = None
    in_epochs = False

    def need_rollup(token: str, lineno: int) -> int:
        rid = _int(token, lineno, "rollup id")
        if not 1 <= rid <= n:
            raise ParseError(lineno, f"rollup id {rid} outside 1..{n}")
        return rid

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        if head == "ROLLUPS":
            if n is not None:
                raise ParseError(lineno, "ROLLUPS declared twice")
            if len(args) != 1:
                raise ParseError(lineno, "usage: ROLLUPS <n>")
            n = _int(args[0], lineno, "rollup count")
            if n < 1:
                raise ParseError(lineno, "rollup count must be positive")
            scenario = Scenario(n)
            continue
        if n is None:
            raise ParseError(lineno, f"{head} before ROLLUPS")
        if head == "GENESIS":
            if in_epochs:
                raise ParseError(lineno, "GENESIS after first EPOCH")
            if len(args) != 3:
                raise ParseError(lineno, "usage: GENESIS <rollup> <address> <amount>")
            scenario.genesis.append(
                (need_rollup(args[0], lineno), _addr(args[1], lineno), _amount(args[2], lineno))
            )
        elif head == "POLICY":
            if in_epochs:
                raise ParseError(lineno, "POLICY after first EPOCH")
            if len(args) != 2:
                raise ParseError(lineno, "usage: POLICY <address> <id,id,...>")
            owner = _addr(args[0], lineno)
            ids = tuple(_int(t, lineno, "rollup id") for t in args[1].split(","))
            try:
                scenario.policies.append(DeductionPolicy(owner, ids).validate(n))
            except InvalidValue as exc:
                raise ParseError(lineno, exc.detail) from None
        elif head == "EPOCH":
            if args:
                raise ParseError(lineno, "EPOCH takes no arguments")
            in_epochs = True
            scenario.epochs.append([])
        elif head in VERBS:
            if not in_epochs:
                raise ParseError(lineno, f"{head} before first EPOCH")
            arity = VERBS[head]
            if len(args) != arity + 2:
                raise ParseError(lineno, f"{head} expects {arity + 2} arguments")
            rollup = need_rollup(args[0], lineno)
            parties = tuple(_addr(t, lineno) for t in args[1 : 1 + arity])
            scenario.epochs[-1].append(Action(rollup, head, parties, _amount(args[-1], lineno)))
        else:
            raise ParseError(lineno, f"unknown directive {head!r}")
    if scenario is None:
        raise ParseError(0, "missing ROLLUPS declaration")
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())
