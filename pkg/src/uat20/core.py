"""Shared domain vocabulary: addresses, amounts, slots, operations, transactions, blocks.

All values are frozen after construction. Amounts are plain Python ints, checked
against ``MAX_AMOUNT`` on every arithmetic step so that an under- or overflow is an
error rather than a silent wrap.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Union

from .errors import InvalidValue

MAX_AMOUNT = 2**256 - 1

_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")


def is_address(value: object) -> bool:
    return isinstance(value, str) and bool(_ADDRESS_RE.match(value))


def normalize_address(value: str) -> str:
    """Return the canonical lowercase form of a 20-byte hex address."""
    if not is_address(value):
        raise InvalidValue(f"malformed address {value!r}")
    return value.lower()


def address_from_int(i: int) -> str:
    return "0x" + format(i, "040x")


def check_amount(value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidValue(f"amount must be an integer, got {value!r}")
    if value < 0 or value > MAX_AMOUNT:
        raise InvalidValue(f"amount out of range: {value}")
    return value


def checked_add(a: int, b: int) -> int:
    total = a + b
    if total > MAX_AMOUNT:
        raise OverflowError(f"amount overflow: {a} + {b}")
    return total


def checked_sub(a: int, b: int) -> int:
    if b > a:
        raise OverflowError(f"amount underflow: {a} - {b}")
    return a - b


def tx_id_for(origin: int, epoch: int, seq: int) -> str:
    return f"R{origin}-E{epoch}-{seq}"


# -- balance slots and operations ------------------------------------------------


@dataclass(frozen=True, order=True)
class GlobalSlot:
    owner: str


@dataclass(frozen=True, order=True)
class LocalSlot:
    rollup: int
    owner: str


BalanceSlot = Union[GlobalSlot, LocalSlot]


class OpKind(enum.Enum):
    ADD = "ADD"
    SUB = "SUB"


@dataclass(frozen=True)
class Operation:
    kind: OpKind
    slot: BalanceSlot
    amount: int


class AllowanceKind(enum.Enum):
    SET = "ALLOW_SET"
    DEC = "ALLOW_DEC"


@dataclass(frozen=True)
class AllowanceOp:
    """Replicated allowance update carried alongside balance operations."""

    kind: AllowanceKind
    owner: str
    spender: str
    amount: int


AnyOp = Union[Operation, AllowanceOp]
OperationSet = tuple[AnyOp, ...]


def SUB(slot: BalanceSlot, amount: int) -> Operation:
    return Operation(OpKind.SUB, slot, amount)


def ADD(slot: BalanceSlot, amount: int) -> Operation:
    return Operation(OpKind.ADD, slot, amount)


# -- transactions ----------------------------------------------------------------


class TxKind(enum.Enum):
    ERC20_TRANSFER = "Erc20Transfer"
    ERC20_TRANSFER_FROM = "Erc20TransferFrom"
    ERC20_APPROVE = "Erc20Approve"
    UAT20_TRANSFER = "Uat20Transfer"
    UAT20_TRANSFER_FROM = "Uat20TransferFrom"
    UAT20_APPROVE = "Uat20Approve"

    @property
    def is_erc20(self) -> bool:
        return self.value.startswith("Erc20")

    @property
    def is_uat20(self) -> bool:
        return not self.is_erc20


@dataclass(frozen=True)
class Transaction:
    """A user transaction as submitted on its origin rollup.

    ``sender`` is always the debited account: the owner for transferFrom and
    approve, the caller for transfer. ``spender`` is only meaningful for
    transferFrom (the caller) and approve (the approved account).
    """

    origin: int
    epoch: int
    seq: int
    kind: TxKind
    sender: str
    recipient: str | None
    spender: str | None
    amount: int
    tx_id: str = field(default="")

    def __post_init__(self) -> None:
        if not self.tx_id:
            object.__setattr__(self, "tx_id", tx_id_for(self.origin, self.epoch, self.seq))

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.origin, self.seq)


class ExecStatus(enum.Enum):
    OK = "OK"
    REJECTED = "REJECTED"


@dataclass(frozen=True)
class ExecutedTx:
    tx: Transaction
    ops: OperationSet = ()
    status: ExecStatus = ExecStatus.OK
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status is ExecStatus.OK

    @property
    def tx_id(self) -> str:
        return self.tx.tx_id


def rejected(tx: Transaction, reason: str) -> ExecutedTx:
    return ExecutedTx(tx, (), ExecStatus.REJECTED, reason)


@dataclass(frozen=True)
class OrderedBlock:
    epoch: int
    t_e: tuple[ExecutedTx, ...] = ()
    t_u: tuple[ExecutedTx, ...] = ()

    def __post_init__(self) -> None:
        if any(not e.tx.kind.is_erc20 for e in self.t_e):
            raise InvalidValue("T_E holds a non-ERC20 transaction")
        if any(not e.tx.kind.is_uat20 for e in self.t_u):
            raise InvalidValue("T_U holds a non-UAT20 transaction")
        ids = [e.tx_id for e in self.t_e + self.t_u]
        if len(ids) != len(set(ids)):
            raise InvalidValue("duplicate tx_id in block")


class Outcome(enum.Enum):
    COMMITTED = "COMMITTED"
    FAILED = "FAILED"


@dataclass(frozen=True)
class CommitStatus:
    tx_id: str
    outcome: Outcome
    reason: str = ""

    def __str__(self) -> str:
        if self.outcome is Outcome.FAILED:
            return f"{self.tx_id}:FAILED({self.reason})"
        return f"{self.tx_id}:COMMITTED"


def committed(tx_id: str) -> CommitStatus:
    return CommitStatus(tx_id, Outcome.COMMITTED)


def failed(tx_id: str, reason: str) -> CommitStatus:
    return CommitStatus(tx_id, Outcome.FAILED, reason)
