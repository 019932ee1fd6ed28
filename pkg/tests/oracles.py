"""Independent reference implementations used as test oracles.

None of these import the code paths they check; they share only plain data.
"""

from __future__ import annotations

import itertools
from collections import defaultdict


def brute_waterfall(balances: dict[int, int], amount: int, priority: tuple[int, ...]):
    """Enumerate every feasible split and keep the one that drains rollups in priority order.

    Among all vectors with 0 <= s_i <= balance_i summing to ``amount``, the greedy
    waterfall is the lexicographic maximum when read in priority order.
    """
    ranges = [range(balances.get(r, 0) + 1) for r in priority]
    best = None
    for split in itertools.product(*ranges):
        if sum(split) != amount:
            continue
        if best is None or split > best:
            best = split
    if best is None:
        return None
    return [(r, s) for r, s in zip(priority, best) if s]


def brute_detect(records, window: int):
    """Triple scan: for every OUT, look at every other record for IN and cross-OUT legs."""
    events = []
    for i, r in enumerate(records):
        if r.direction.value != "OUT":
            continue
        ins = [
            j
            for j, q in enumerate(records)
            if j < i
            and q.direction.value == "IN"
            and (q.user, q.token, q.chain) == (r.user, r.token, r.chain)
        ]
        outs = [
            k
            for k, q in enumerate(records)
            if q.direction.value == "OUT"
            and (q.user, q.token) == (r.user, r.token)
            and q.chain != r.chain
            and r.timestamp - window <= q.timestamp < r.timestamp
        ]
        if ins and outs:
            events.append((i, tuple(sorted(ins + outs))))
    return events


class ReferenceLedger:
    """Straight-line model of the whole protocol on a single copy of the state.

    Per-rollup balances are the only balance store; the global balance of an
    account is recomputed as their sum whenever it is needed.
    """

    def __init__(self, n, genesis, policies):
        self.n = n
        self.local = {i: defaultdict(int) for i in range(1, n + 1)}
        for rollup, addr, amount in genesis:
            self.local[rollup][addr] += amount
        self.erc_allow = {i: defaultdict(int) for i in range(1, n + 1)}
        self.uat_allow = defaultdict(int)
        self.policy = {p.owner: list(p.priority) for p in policies}

    def total(self, addr):
        return sum(self.local[i][addr] for i in self.local)

    def run_epoch(self, epoch, actions):
        seqs = defaultdict(int)
        erc_ok, uat_ok, rejected = [], [], []
        for a in actions:
            seq = seqs[a.rollup]
            seqs[a.rollup] += 1
            tx_id = f"R{a.rollup}-E{epoch}-{seq}"
            key = (a.rollup, seq, tx_id)
            bal, allow = self.local[a.rollup], self.erc_allow[a.rollup]
            if a.verb == "E20XFER":
                frm, to = a.parties
                if bal[frm] < a.amount:
                    rejected.append(tx_id)
                    continue
                bal[frm] -= a.amount
                bal[to] += a.amount
                erc_ok.append(key)
            elif a.verb == "E20XFERFROM":
                spender, owner, to = a.parties
                if allow[(owner, spender)] < a.amount:
                    rejected.append(tx_id)
                    continue
                if bal[owner] < a.amount:
                    rejected.append(tx_id)
                    continue
                allow[(owner, spender)] -= a.amount
                bal[owner] -= a.amount
                bal[to] += a.amount
                erc_ok.append(key)
            elif a.verb == "E20APPROVE":
                allow[tuple(a.parties)] = a.amount
                erc_ok.append(key)
            else:
                uat_ok.append(key + (a,))
        statuses = [(k[2], "COMMITTED") for k in sorted(erc_ok)]
        for *_, tx_id, a in sorted(uat_ok, key=lambda k: k[:2]):
            statuses.append((tx_id, self._commit_uat(a)))
        return statuses, rejected

    def _commit_uat(self, a):
        if a.verb == "U20APPROVE":
            self.uat_allow[tuple(a.parties)] = a.amount
            return "COMMITTED"
        if a.verb == "U20XFERFROM":
            spender, owner, to = a.parties
            if self.uat_allow[(owner, spender)] < a.amount:
                return "FAILED(insufficient_allowance)"
        else:
            owner, to = a.parties
            spender = None
        if self.total(owner) < a.amount:
            return "FAILED(insufficient_balance)"
        left = a.amount
        for r in self.policy.get(owner, range(1, self.n + 1)):
            take = min(left, self.local[r][owner])
            self.local[r][owner] -= take
            self.local[r][to] += take
            left -= take
        assert left == 0
        if spender is not None:
            self.uat_allow[(owner, spender)] -= a.amount
        return "COMMITTED"

    def dump(self):
        """Same shape as the harness state dump minus policies."""
        lines = []
        for i in sorted(self.local):
            lines += [f"ERC20 {i} {a} {v}" for a, v in sorted(self.local[i].items()) if v]
        addrs = sorted({a for i in self.local for a, v in self.local[i].items() if v})
        lines += [f"UAT20.BU {a} {self.total(a)}" for a in addrs]
        for i in sorted(self.local):
            lines += [f"UAT20.BE {i} {a} {v}" for a, v in sorted(self.local[i].items()) if v]
        lines += [f"UAT20.ALLOW {o} {s} {v}" for (o, s), v in sorted(self.uat_allow.items()) if v]
        return lines


def run_reference(scenario):
    ref = ReferenceLedger(scenario.n, scenario.genesis, scenario.policies)
    statuses, rejected = [], []
    for epoch, actions in enumerate(scenario.epochs, start=1):
        s, r = ref.run_epoch(epoch, actions)
        statuses += s
        rejected += r
    return ref, statuses, rejected


def unit_waterfall_prefixes(balances: dict[int, int], priority: tuple[int, ...]):
    """Deduct one token at a time from the first rollup (in priority order) that still has
    funds; yield the cumulative split after 0, 1, 2, ... tokens."""
    left = {r: balances.get(r, 0) for r in priority}
    taken = {r: 0 for r in priority}
    yield []
    while any(left.values()):
        r = next(r for r in priority if left[r])
        left[r] -= 1
        taken[r] += 1
        yield [(q, taken[q]) for q in priority if taken[q]]
