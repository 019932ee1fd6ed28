import copy

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import A, C, S, X
from uat20.core import ADD, SUB, ExecStatus, GlobalSlot, LocalSlot, OpKind, TxKind
from uat20.errors import CommitDesync
from uat20.sigma20 import Erc20State


@pytest.fixture
def state():
    return Erc20State(X, {C: 40})


def test_transfer_emits_o1_shape(state):
    etx = state.execute_transfer(C, A, 10, epoch=1, seq=0)
    assert etx.status is ExecStatus.OK
    assert etx.tx.kind is TxKind.ERC20_TRANSFER
    assert state.balance_of(C) == 30 and state.balance_of(A) == 10
    assert etx.ops == (
        SUB(GlobalSlot(C), 10),
        ADD(GlobalSlot(A), 10),
        SUB(LocalSlot(X, C), 10),
        ADD(LocalSlot(X, A), 10),
    )


def test_self_transfer_is_identity(state):
    etx = state.execute_transfer(C, C, 10, 1, 0)
    assert etx.ok and len(etx.ops) == 4
    assert state.balances == {C: 40}


def test_transfer_one_over_is_rejected(state):
    before = copy.deepcopy(state.__dict__)
    etx = state.execute_transfer(C, A, 41, 1, 0)
    assert etx.status is ExecStatus.REJECTED
    assert etx.reason == "insufficient_local_balance"
    assert etx.ops == ()
    assert state.__dict__ == before


def test_transfer_from(state):
    state.execute_approve(C, S, 20, 1, 0)
    etx = state.execute_transfer_from(S, C, A, 15, 1, 1)
    assert etx.ok
    assert state.allowance(C, S) == 5
    assert state.balance_of(C) == 25 and state.balance_of(A) == 15
    assert etx.ops[0] == SUB(GlobalSlot(C), 15)
    assert etx.ops[3] == ADD(LocalSlot(X, A), 15)


def test_transfer_from_over_allowance(state):
    state.execute_approve(C, S, 20, 1, 0)
    etx = state.execute_transfer_from(S, C, A, 21, 1, 1)
    assert etx.reason == "insufficient_allowance"
    assert state.allowance(C, S) == 20 and state.balance_of(C) == 40


def test_transfer_from_over_balance(state):
    state.execute_approve(C, S, 100, 1, 0)
    etx = state.execute_transfer_from(S, C, A, 41, 1, 1)
    assert etx.reason == "insufficient_local_balance"
    assert state.allowance(C, S) == 100


def test_transfer_from_zero(state):
    etx = state.execute_transfer_from(S, C, A, 0, 1, 0)
    assert etx.ok
    assert state.balances == {C: 40} and state.allowance(C, S) == 0


def test_approve_overwrites_and_revokes(state):
    etx = state.execute_approve(C, S, 100, 1, 0)
    assert etx.ok and etx.ops == () and etx.tx.kind is TxKind.ERC20_APPROVE
    assert state.allowance(C, S) == 100
    state.execute_approve(C, S, 30, 1, 1)
    assert state.allowance(C, S) == 30
    state.execute_approve(C, S, 0, 1, 2)
    assert state.allowance(C, S) == 0


def test_external_debit_credit():
    state = Erc20State(X, {C: 30})
    state.apply_external_debit_credit([(C, 30)], [(A, 30)])
    assert state.balances == {A: 30}
    state.apply_external_debit_credit([], [])
    assert state.balances == {A: 30}


def test_external_debit_uncovered_is_desync():
    state = Erc20State(X, {C: 30})
    with pytest.raises(CommitDesync):
        state.apply_external_debit_credit([(C, 31)], [(A, 31)])
    assert state.balances == {C: 30}


def test_malformed_address_rejected(state):
    assert state.execute_transfer(C, "0x123", 1, 1, 0).reason == "invalid_address"


users = st.sampled_from([A, C, S])


@given(
    st.lists(
        st.tuples(st.sampled_from(["xfer", "from", "approve"]), users, users, users, st.integers(0, 60)),
        max_size=30,
    )
)
def test_supply_conservation_and_op_fidelity(script):
    state = Erc20State(X, {C: 40, A: 25})
    supply = state.total_supply()
    shadow_bu = dict(state.balances)
    shadow_be = dict(state.balances)
    for i, (what, p, q, r, amount) in enumerate(script):
        before = copy.deepcopy(state.__dict__)
        if what == "xfer":
            etx = state.execute_transfer(p, q, amount, 1, i)
        elif what == "from":
            etx = state.execute_transfer_from(p, q, r, amount, 1, i)
        else:
            etx = state.execute_approve(p, q, amount, 1, i)
        if not etx.ok:
            assert state.__dict__ == before
            continue
        for op in etx.ops:
            table = shadow_bu if isinstance(op.slot, GlobalSlot) else shadow_be
            sign = 1 if op.kind is OpKind.ADD else -1
            table[op.slot.owner] = table.get(op.slot.owner, 0) + sign * op.amount
        assert state.total_supply() == supply
        live = {k: v for k, v in shadow_be.items() if v}
        assert live == state.balances
        assert {k: v for k, v in shadow_bu.items() if v} == state.balances
