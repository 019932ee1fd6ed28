"""Line-oriented text encoding for operations, transactions, blocks and commit statuses.

    SUB(G:0x..,10)  ADD(L2:0x..,10)  ALLOW_SET(0xowner,0xspender,5)  ALLOW_DEC(...)
    EXEC <tx_id> <origin> <epoch> <seq> <kind> <sender> <recipient|-> <spender|-> <amount> <status> <ops|->
    BLOCK <epoch> TE=<id,...> TU=<id,...>    followed by one EXEC line per transaction
    <tx_id>:COMMITTED | <tx_id>:FAILED(<reason>)
"""

from __future__ import annotations

import re
from typing import Iterable

from .coordinator import block_summary
from .core import (
    AllowanceKind,
    AllowanceOp,
    AnyOp,
    BalanceSlot,
    CommitStatus,
    ExecStatus,
    ExecutedTx,
    GlobalSlot,
    LocalSlot,
    Operation,
    OpKind,
    OrderedBlock,
    Outcome,
    Transaction,
    TxKind,
)
from .errors import InvalidValue

_OP_RE = re.compile(r"^(ADD|SUB|ALLOW_SET|ALLOW_DEC)\(([^()]*)\)$")
_STATUS_RE = re.compile(r"^(.+?):(COMMITTED|FAILED\((.*)\))$")
_SLOT_RE = re.compile(r"^(?:G|L(\d+)):(0x[0-9a-f]{40})$")


def encode_slot(slot: BalanceSlot) -> str:
    if isinstance(slot, GlobalSlot):
        return f"G:{slot.owner}"
    return f"L{slot.rollup}:{slot.owner}"


def decode_slot(text: str) -> BalanceSlot:
    m = _SLOT_RE.match(text)
    if not m:
        raise InvalidValue(f"bad slot {text!r}")
    if m.group(1) is None:
        return GlobalSlot(m.group(2))
    return LocalSlot(int(m.group(1)), m.group(2))


def encode_op(op: AnyOp) -> str:
    if isinstance(op, AllowanceOp):
        return f"{op.kind.value}({op.owner},{op.spender},{op.amount})"
    return f"{op.kind.value}({encode_slot(op.slot)},{op.amount})"


def decode_op(text: str) -> AnyOp:
    m = _OP_RE.match(text)
    if not m:
        raise InvalidValue(f"bad operation {text!r}")
    name, args = m.group(1), m.group(2).split(",")
    if name.startswith("ALLOW"):
        owner, spender, amount = args
        return AllowanceOp(AllowanceKind(name), owner, spender, int(amount))
    slot, amount = args
    return Operation(OpKind(name), decode_slot(slot), int(amount))


def encode_executed(etx: ExecutedTx) -> str:
    tx = etx.tx
    status = "OK" if etx.ok else f"REJECTED({etx.reason})"
    ops = ";".join(encode_op(op) for op in etx.ops) or "-"
    return " ".join(
        [
            "EXEC",
            tx.tx_id,
            str(tx.origin),
            str(tx.epoch),
            str(tx.seq),
            tx.kind.value,
            tx.sender,
            tx.recipient or "-",
            tx.spender or "-",
            str(tx.amount),
            status,
            ops,
        ]
    )


def decode_executed(line: str) -> ExecutedTx:
    parts = line.split()
    if len(parts) != 12 or parts[0] != "EXEC":
        raise InvalidValue(f"bad EXEC line {line!r}")
    _, tx_id, origin, epoch, seq, kind, sender, recipient, spender, amount, status, ops = parts
    tx = Transaction(
        int(origin),
        int(epoch),
        int(seq),
        TxKind(kind),
        sender,
        None if recipient == "-" else recipient,
        None if spender == "-" else spender,
        int(amount),
        tx_id,
    )
    decoded = () if ops == "-" else tuple(decode_op(o) for o in ops.split(";"))
    if status == "OK":
        return ExecutedTx(tx, decoded)
    m = re.match(r"^REJECTED\((.*)\)$", status)
    if not m:
        raise InvalidValue(f"bad exec status {status!r}")
    return ExecutedTx(tx, decoded, ExecStatus.REJECTED, m.group(1))


def encode_block(block: OrderedBlock) -> list[str]:
    return [block_summary(block), *(encode_executed(e) for e in block.t_e + block.t_u)]


def decode_block(lines: Iterable[str]) -> OrderedBlock:
    lines = list(lines)
    m = re.match(r"^BLOCK (\d+) TE=(\S*) TU=(\S*)$", lines[0]) if lines else None
    if not m:
        raise InvalidValue("missing BLOCK header")
    by_id = {}
    for line in lines[1:]:
        etx = decode_executed(line)
        by_id[etx.tx_id] = etx

    def queue(ids: str) -> tuple[ExecutedTx, ...]:
        return tuple(by_id[i] for i in ids.split(",")) if ids else ()

    return OrderedBlock(int(m.group(1)), queue(m.group(2)), queue(m.group(3)))


def encode_status(status: CommitStatus) -> str:
    return str(status)


def decode_status(text: str) -> CommitStatus:
    m = _STATUS_RE.match(text)
    if not m:
        raise InvalidValue(f"bad commit status {text!r}")
    if m.group(2) == "COMMITTED":
        return CommitStatus(m.group(1), Outcome.COMMITTED)
    return CommitStatus(m.group(1), Outcome.FAILED, m.group(3))
