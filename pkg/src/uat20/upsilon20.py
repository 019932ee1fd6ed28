"""The UAT20 replica hosted on each rollup.

A replica mirrors every rollup's ERC20 balances (``b_e``) plus their per-user sum
(``b_u``). Execution of UAT20 calls only emits operations; all balance checks and
all state changes happen at commit, in the arbitration order fixed by the
coordinator, so every replica reaches the same verdict for every transaction.
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    ADD,
    SUB,
    AllowanceKind,
    AllowanceOp,
    CommitStatus,
    ExecutedTx,
    GlobalSlot,
    LocalSlot,
    Operation,
    OpKind,
    Transaction,
    TxKind,
    check_amount,
    checked_add,
    committed,
    failed,
    is_address,
    rejected,
)
from .errors import CommitDesync, InvalidValue
from .sigma20 import Erc20State, put


@dataclass(frozen=True)
class DeductionPolicy:
    owner: str
    priority: tuple[int, ...]

    def validate(self, n: int) -> "DeductionPolicy":
        if sorted(self.priority) != list(range(1, n + 1)):
            raise InvalidValue(
                f"policy for {self.owner} must be a permutation of 1..{n}, got {self.priority}"
            )
        return self


def default_policy(owner: str, n: int) -> DeductionPolicy:
    return DeductionPolicy(owner, tuple(range(1, n + 1)))


class BalanceBook:
    """Global balances ``b_u`` and per-rollup mirrors ``b_e[1..n]``. Zero entries are dropped."""

    def __init__(self, n: int) -> None:
        if n < 1:
            raise InvalidValue("need at least one rollup")
        self.n = n
        self.b_u: dict[str, int] = {}
        self.b_e: dict[int, dict[str, int]] = {i: {} for i in range(1, n + 1)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BalanceBook):
            return NotImplemented
        return (self.n, self.b_u, self.b_e) == (other.n, other.b_u, other.b_e)

    def __repr__(self) -> str:
        return f"BalanceBook(n={self.n}, b_u={self.b_u!r}, b_e={self.b_e!r})"

    def global_balance(self, addr: str) -> int:
        return self.b_u.get(addr, 0)

    def local_balance(self, rollup: int, addr: str) -> int:
        return self.b_e[rollup].get(addr, 0)

    def credit_genesis(self, rollup: int, addr: str, amount: int) -> None:
        put(self.b_e[rollup], addr, checked_add(self.local_balance(rollup, addr), amount))
        put(self.b_u, addr, checked_add(self.global_balance(addr), amount))

    def apply(self, op: Operation) -> None:
        slot = op.slot
        if isinstance(slot, GlobalSlot):
            table, label = self.b_u, f"B_u[{slot.owner}]"
        else:
            if slot.rollup not in self.b_e:
                raise CommitDesync(f"unknown rollup {slot.rollup}")
            table, label = self.b_e[slot.rollup], f"B_e^{slot.rollup}[{slot.owner}]"
        have = table.get(slot.owner, 0)
        if op.kind is OpKind.ADD:
            put(table, slot.owner, checked_add(have, op.amount))
        else:
            if have < op.amount:
                raise CommitDesync(f"SUB {op.amount} drives {label}={have} negative")
            put(table, slot.owner, have - op.amount)

    def aggregation_violations(self) -> list[str]:
        """Addresses where ``b_u`` differs from the sum of the per-rollup mirrors."""
        addrs = set(self.b_u)
        for table in self.b_e.values():
            addrs.update(table)
        bad = []
        for a in sorted(addrs):
            total = sum(self.local_balance(i, a) for i in self.b_e)
            if total != self.global_balance(a):
                bad.append(f"{a}: B_u={self.global_balance(a)} sum(B_e)={total}")
        return bad

    def global_supply(self) -> int:
        return sum(self.b_u.values())


def resolve_deduction(
    book: BalanceBook, owner: str, amount: int, policy: DeductionPolicy
) -> list[tuple[int, int]]:
    """Split a global debit into per-rollup slices, draining rollups in priority order."""
    remaining = amount
    slices = []
    for rollup in policy.priority:
        if remaining == 0:
            break
        take = min(remaining, book.local_balance(rollup, owner))
        if take:
            slices.append((rollup, take))
            remaining -= take
    if remaining:
        raise CommitDesync(
            f"cannot deduct {amount} from {owner}: short by {remaining} (aggregation broken)"
        )
    return slices


class Replica:
    def __init__(
        self,
        rollup: int,
        n: int,
        erc20: Erc20State | None = None,
        policies: Iterable[DeductionPolicy] = (),
    ) -> None:
        if not 1 <= rollup <= n:
            raise InvalidValue(f"rollup {rollup} outside 1..{n}")
        self.rollup = rollup
        self.book = BalanceBook(n)
        self.uat_allowances: dict[tuple[str, str], int] = {}
        self.policies: dict[str, DeductionPolicy] = {}
        self.epoch = 0
        self.erc20 = erc20
        for p in policies:
            self.set_policy(p)

    @property
    def n(self) -> int:
        return self.book.n

    def set_policy(self, policy: DeductionPolicy) -> None:
        """Out-of-band replicated configuration update; must be applied on every replica."""
        owner = policy.owner.lower()
        self.policies[owner] = DeductionPolicy(owner, tuple(policy.priority)).validate(self.n)

    def policy_for(self, owner: str) -> DeductionPolicy:
        return self.policies.get(owner) or default_policy(owner, self.n)

    def allowance(self, owner: str, spender: str) -> int:
        return self.uat_allowances.get((owner, spender), 0)

    def clone(self) -> "Replica":
        return copy.deepcopy(self)

    # -- execution phase: metadata checks only, no state change ------------------

    def _tx(self, kind, sender, recipient, spender, amount, epoch, seq) -> Transaction:
        return Transaction(self.rollup, epoch, seq, kind, sender, recipient, spender, amount)

    @staticmethod
    def _canon(*addrs: str) -> tuple[str, ...] | None:
        if all(is_address(a) for a in addrs):
            return tuple(a.lower() for a in addrs)
        return None

    def execute_uat_transfer(
        self, sender: str, recipient: str, amount: int, epoch: int, seq: int
    ) -> ExecutedTx:
        check_amount(amount)
        canon = self._canon(sender, recipient)
        if canon is None:
            tx = self._tx(TxKind.UAT20_TRANSFER, sender, recipient, None, amount, epoch, seq)
            return rejected(tx, "invalid_address")
        sender, recipient = canon
        tx = self._tx(TxKind.UAT20_TRANSFER, sender, recipient, None, amount, epoch, seq)
        return ExecutedTx(tx, (SUB(GlobalSlot(sender), amount), ADD(GlobalSlot(recipient), amount)))

    def execute_uat_transfer_from(
        self, spender: str, owner: str, recipient: str, amount: int, epoch: int, seq: int
    ) -> ExecutedTx:
        check_amount(amount)
        canon = self._canon(spender, owner, recipient)
        if canon is None:
            tx = self._tx(TxKind.UAT20_TRANSFER_FROM, owner, recipient, spender, amount, epoch, seq)
            return rejected(tx, "invalid_address")
        spender, owner, recipient = canon
        tx = self._tx(TxKind.UAT20_TRANSFER_FROM, owner, recipient, spender, amount, epoch, seq)
        ops = (
            SUB(GlobalSlot(owner), amount),
            ADD(GlobalSlot(recipient), amount),
            AllowanceOp(AllowanceKind.DEC, owner, spender, amount),
        )
        return ExecutedTx(tx, ops)

    def execute_uat_approve(
        self, owner: str, spender: str, amount: int, epoch: int, seq: int
    ) -> ExecutedTx:
        check_amount(amount)
        canon = self._canon(owner, spender)
        if canon is None:
            tx = self._tx(TxKind.UAT20_APPROVE, owner, None, spender, amount, epoch, seq)
            return rejected(tx, "invalid_address")
        owner, spender = canon
        tx = self._tx(TxKind.UAT20_APPROVE, owner, None, spender, amount, epoch, seq)
        return ExecutedTx(tx, (AllowanceOp(AllowanceKind.SET, owner, spender, amount),))

    # -- commit phase ------------------------------------------------------------

    def commit_e(self, t_e: Sequence[ExecutedTx]) -> list[CommitStatus]:
        """Apply ERC20 operation sets to the mirrors.

        The co-located ERC20 balances are left alone: the origin rollup already
        updated them at execution and no other rollup's ERC20 is affected.
        """
        statuses = []
        for etx in t_e:
            if not etx.tx.kind.is_erc20:
                raise CommitDesync(f"{etx.tx_id} is not an ERC20 transaction")
            for op in etx.ops:
                if not isinstance(op, Operation):
                    raise CommitDesync(f"{etx.tx_id}: unexpected operation {op!r} in T_E")
                if isinstance(op.slot, LocalSlot) and op.slot.rollup != etx.tx.origin:
                    raise CommitDesync(f"{etx.tx_id}: touches rollup {op.slot.rollup}")
                self.book.apply(op)
            statuses.append(committed(etx.tx_id))
        return statuses

    def commit_u(self, t_u: Sequence[ExecutedTx]) -> list[CommitStatus]:
        return [self._commit_uat(etx) for etx in t_u]

    def _commit_uat(self, etx: ExecutedTx) -> CommitStatus:
        debit = credit = None
        amount = 0
        allowance_ops = []
        for op in etx.ops:
            if isinstance(op, AllowanceOp):
                allowance_ops.append(op)
            elif isinstance(op.slot, GlobalSlot) and op.kind is OpKind.SUB and debit is None:
                debit, amount = op.slot.owner, op.amount
            elif isinstance(op.slot, GlobalSlot) and op.kind is OpKind.ADD and credit is None:
                credit = op.slot.owner
                if op.amount != amount:
                    raise CommitDesync(f"{etx.tx_id}: unbalanced global operations")
            else:
                raise CommitDesync(f"{etx.tx_id}: unexpected operation {op!r} in T_U")
        if (debit is None) != (credit is None):
            raise CommitDesync(f"{etx.tx_id}: half a transfer in operation set")

        for op in allowance_ops:
            if op.kind is AllowanceKind.DEC and self.allowance(op.owner, op.spender) < op.amount:
                return failed(etx.tx_id, "insufficient_allowance")
        if debit is not None and self.book.global_balance(debit) < amount:
            return failed(etx.tx_id, "insufficient_balance")

        if debit is not None:
            self._move(debit, credit, amount)
        for op in allowance_ops:
            key = (op.owner, op.spender)
            if op.kind is AllowanceKind.SET:
                put(self.uat_allowances, key, op.amount)
            else:
                put(self.uat_allowances, key, self.allowance(*key) - op.amount)
        return committed(etx.tx_id)

    def _move(self, debit: str, credit: str, amount: int) -> None:
        slices = resolve_deduction(self.book, debit, amount, self.policy_for(debit))
        book = self.book
        for rollup, part in slices:
            put(book.b_e[rollup], debit, book.local_balance(rollup, debit) - part)
            put(book.b_e[rollup], credit, checked_add(book.local_balance(rollup, credit), part))
        put(book.b_u, debit, book.global_balance(debit) - amount)
        put(book.b_u, credit, checked_add(book.global_balance(credit), amount))
        if self.erc20 is not None:
            mine = [part for rollup, part in slices if rollup == self.rollup]
            if mine:
                self.erc20.apply_external_debit_credit([(debit, mine[0])], [(credit, mine[0])])

    # -- canonical state ---------------------------------------------------------

    def dump_lines(self, include_policies: bool = True) -> list[str]:
        lines = [f"UAT20.BU {a} {v}" for a, v in sorted(self.book.b_u.items())]
        for i in sorted(self.book.b_e):
            lines += [f"UAT20.BE {i} {a} {v}" for a, v in sorted(self.book.b_e[i].items())]
        lines += [f"UAT20.ALLOW {o} {s} {v}" for (o, s), v in sorted(self.uat_allowances.items())]
        if include_policies:
            for owner, p in sorted(self.policies.items()):
                lines.append(f"UAT20.POLICY {owner} {','.join(map(str, p.priority))}")
        return lines

    def canonical_state(self) -> list[str]:
        return [f"EPOCH {self.epoch}", *self.dump_lines(include_policies=False)]


def state_digest(replica: Replica) -> str:
    """SHA-256 over the canonical serialization of (book, allowances, epoch)."""
    h = hashlib.sha256()
    for line in replica.canonical_state():
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()
