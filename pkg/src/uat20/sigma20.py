"""Per-rollup ERC20 token.

Execution updates the local balances immediately and emits the four-operation set
that the UAT20 replicas apply to their global and per-rollup mirrors at commit.
"""

from __future__ import annotations

import copy
from typing import Iterable

from .core import (
    ADD,
    SUB,
    ExecutedTx,
    GlobalSlot,
    LocalSlot,
    Transaction,
    TxKind,
    check_amount,
    checked_add,
    checked_sub,
    is_address,
    rejected,
)
from .errors import CommitDesync


def put(mapping: dict, key, value: int) -> None:
    """Store ``value`` under ``key``, dropping zero entries so equal states compare equal."""
    if value:
        mapping[key] = value
    else:
        mapping.pop(key, None)


def _lower(*addrs: str) -> tuple[str, ...]:
    return tuple(a.lower() if isinstance(a, str) else a for a in addrs)


class Erc20State:
    def __init__(self, rollup: int, balances: dict[str, int] | None = None) -> None:
        self.rollup = rollup
        self.balances: dict[str, int] = {}
        self.allowances: dict[tuple[str, str], int] = {}
        for addr, amount in (balances or {}).items():
            put(self.balances, addr.lower(), check_amount(amount))

    def __repr__(self) -> str:
        return f"Erc20State(rollup={self.rollup}, balances={self.balances!r})"

    def balance_of(self, addr: str) -> int:
        return self.balances.get(addr, 0)

    def allowance(self, owner: str, spender: str) -> int:
        return self.allowances.get((owner, spender), 0)

    def total_supply(self) -> int:
        return sum(self.balances.values())

    def snapshot(self) -> "Erc20State":
        return copy.deepcopy(self)

    # -- execution phase ---------------------------------------------------------

    def _tx(self, kind, sender, recipient, spender, amount, epoch, seq) -> Transaction:
        return Transaction(self.rollup, epoch, seq, kind, sender, recipient, spender, amount)

    def _move(self, debit: str, credit: str, amount: int) -> tuple:
        put(self.balances, debit, checked_sub(self.balance_of(debit), amount))
        put(self.balances, credit, checked_add(self.balance_of(credit), amount))
        return (
            SUB(GlobalSlot(debit), amount),
            ADD(GlobalSlot(credit), amount),
            SUB(LocalSlot(self.rollup, debit), amount),
            ADD(LocalSlot(self.rollup, credit), amount),
        )

    def execute_transfer(
        self, sender: str, recipient: str, amount: int, epoch: int, seq: int
    ) -> ExecutedTx:
        check_amount(amount)
        sender, recipient = _lower(sender, recipient)
        tx = self._tx(TxKind.ERC20_TRANSFER, sender, recipient, None, amount, epoch, seq)
        if not (is_address(sender) and is_address(recipient)):
            return rejected(tx, "invalid_address")
        if self.balance_of(sender) < amount:
            return rejected(tx, "insufficient_local_balance")
        return ExecutedTx(tx, self._move(sender, recipient, amount))

    def execute_transfer_from(
        self, spender: str, owner: str, recipient: str, amount: int, epoch: int, seq: int
    ) -> ExecutedTx:
        check_amount(amount)
        spender, owner, recipient = _lower(spender, owner, recipient)
        tx = self._tx(TxKind.ERC20_TRANSFER_FROM, owner, recipient, spender, amount, epoch, seq)
        if not (is_address(spender) and is_address(owner) and is_address(recipient)):
            return rejected(tx, "invalid_address")
        if self.allowance(owner, spender) < amount:
            return rejected(tx, "insufficient_allowance")
        if self.balance_of(owner) < amount:
            return rejected(tx, "insufficient_local_balance")
        put(self.allowances, (owner, spender), self.allowance(owner, spender) - amount)
        return ExecutedTx(tx, self._move(owner, recipient, amount))

    def execute_approve(
        self, owner: str, spender: str, amount: int, epoch: int, seq: int
    ) -> ExecutedTx:
        check_amount(amount)
        owner, spender = _lower(owner, spender)
        tx = self._tx(TxKind.ERC20_APPROVE, owner, None, spender, amount, epoch, seq)
        if not (is_address(owner) and is_address(spender)):
            return rejected(tx, "invalid_address")
        put(self.allowances, (owner, spender), amount)
        return ExecutedTx(tx, ())

    # -- commit phase ------------------------------------------------------------

    def apply_external_debit_credit(
        self,
        debits: Iterable[tuple[str, int]],
        credits: Iterable[tuple[str, int]],
    ) -> None:
        """Apply a commit-phase slice from the UAT20 replica, all or nothing."""
        staged = dict(self.balances)
        for addr, amount in debits:
            have = staged.get(addr, 0)
            if have < amount:
                raise CommitDesync(
                    f"rollup {self.rollup}: debit {amount} from {addr} exceeds balance {have}"
                )
            put(staged, addr, have - amount)
        for addr, amount in credits:
            put(staged, addr, checked_add(staged.get(addr, 0), amount))
        self.balances = staged
