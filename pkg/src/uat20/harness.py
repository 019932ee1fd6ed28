"""Deterministic scenario runner, convergence checks and seeded fuzzing.

Each epoch runs as a sequence of barriers: execute every action on its rollup,
broadcast every outbox, seal the block, then sync it to every replica. After each
epoch all protocol invariants are checked; the first violation aborts the run.
"""

from __future__ import annotations

import copy
import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from .coordinator import Coordinator, block_summary
from .core import (
    CommitStatus,
    ExecutedTx,
    OrderedBlock,
    Outcome,
    address_from_int,
    checked_add,
)
from .errors import CommitDesync, EpochMismatch, InvalidValue, InvariantViolation
from .scenario import Action, Scenario
from .sigma20 import Erc20State, put
from .synchronizer import SyncRecord, broadcast, sync, sync_trace_line
from .upsilon20 import DeductionPolicy, Replica, state_digest

INVARIANTS = (
    "aggregation",
    "global_supply_conservation",
    "local_supply_conservation",
    "digest_equality",
    "status_agreement",
    "mirror_equality",
    "arbitration_permutations",
)

# T_U / T_E sizes up to which the permutation oracle enumerates every ordering
MAX_PERMUTED_TU = 3
MAX_PERMUTED_TE = 5


@dataclass
class EpochResult:
    epoch: int
    executed: list[ExecutedTx]
    block: OrderedBlock
    statuses: list[CommitStatus]
    trace: list[str]


@dataclass
class RunReport:
    n: int
    epochs: list[EpochResult] = field(default_factory=list)
    invariants: dict[str, str] = field(default_factory=dict)
    final_state: list[str] = field(default_factory=list)
    digest: str = ""
    error: str = ""
    permuted_epochs: int = 0

    @property
    def ok(self) -> bool:
        return not self.error and all(v != "FAIL" for v in self.invariants.values())

    def counts(self) -> dict[str, int]:
        c = {"committed": 0, "failed": 0, "rejected": 0}
        for ep in self.epochs:
            c["rejected"] += sum(1 for e in ep.executed if not e.ok)
            for s in ep.statuses:
                c["committed" if s.outcome is Outcome.COMMITTED else "failed"] += 1
        return c

    def status_of(self, tx_id: str) -> CommitStatus | None:
        for ep in self.epochs:
            for s in ep.statuses:
                if s.tx_id == tx_id:
                    return s
        return None

    def to_lines(self, dump_state: bool = False, trace: bool = False) -> list[str]:
        lines = [f"SCENARIO rollups={self.n} epochs={len(self.epochs)}"]
        for ep in self.epochs:
            for etx in ep.executed:
                if not etx.ok:
                    lines.append(f"REJECTED {etx.tx_id} {etx.reason}")
            lines.append(block_summary(ep.block))
            if trace:
                lines += ep.trace
            lines += [f"STATUS {s}" for s in ep.statuses]
        if dump_state:
            lines += self.final_state
        lines += [f"INVARIANT {name} {self.invariants.get(name, 'SKIP')}" for name in INVARIANTS]
        if self.error:
            lines.append(f"ERROR {self.error}")
        lines.append(f"DIGEST {self.digest}")
        c = self.counts()
        lines.append(
            f"SUMMARY committed={c['committed']} failed={c['failed']} rejected={c['rejected']}"
        )
        return lines

    def to_text(self, dump_state: bool = False, trace: bool = False) -> str:
        return "\n".join(self.to_lines(dump_state, trace)) + "\n"

    def summary_dict(self) -> dict:
        return {
            "rollups": self.n,
            "epochs": len(self.epochs),
            "ok": self.ok,
            "digest": self.digest,
            "invariants": {name: self.invariants.get(name, "SKIP") for name in INVARIANTS},
            **self.counts(),
        }


class World:
    """n rollups, each hosting an ERC20 token and a UAT20 replica, plus one coordinator."""

    def __init__(self, scenario: Scenario) -> None:
        n = scenario.n
        if n < 1:
            raise InvalidValue("need at least one rollup")
        self.n = n
        self.erc20 = {i: Erc20State(i) for i in range(1, n + 1)}
        self.replicas = {
            i: Replica(i, n, self.erc20[i], scenario.policies) for i in range(1, n + 1)
        }
        for rollup, addr, amount in scenario.genesis:
            state = self.erc20[rollup]
            put(state.balances, addr, checked_add(state.balance_of(addr), amount))
            for replica in self.replicas.values():
                replica.book.credit_genesis(rollup, addr, amount)
        self.coordinator = Coordinator(n)
        self.global_supply = self.replicas[1].book.global_supply()
        self.local_supply = {i: s.total_supply() for i, s in self.erc20.items()}

    @property
    def epoch(self) -> int:
        return self.coordinator.epoch

    def execute(self, actions: Sequence[Action]) -> tuple[list[ExecutedTx], dict[int, list]]:
        epoch = self.epoch
        seqs = dict.fromkeys(self.erc20, 0)
        outboxes: dict[int, list[ExecutedTx]] = {i: [] for i in self.erc20}
        executed = []
        for action in actions:
            seq = seqs[action.rollup]
            seqs[action.rollup] += 1
            etx = self._dispatch(action, epoch, seq)
            executed.append(etx)
            if etx.ok:
                outboxes[action.rollup].append(etx)
        return executed, outboxes

    def _dispatch(self, action: Action, epoch: int, seq: int) -> ExecutedTx:
        r, p, amt = action.rollup, action.parties, action.amount
        erc20, replica = self.erc20[r], self.replicas[r]
        verb = action.verb
        if verb == "E20XFER":
            return erc20.execute_transfer(p[0], p[1], amt, epoch, seq)
        if verb == "E20APPROVE":
            return erc20.execute_approve(p[0], p[1], amt, epoch, seq)
        if verb == "E20XFERFROM":
            return erc20.execute_transfer_from(p[0], p[1], p[2], amt, epoch, seq)
        if verb == "U20XFER":
            return replica.execute_uat_transfer(p[0], p[1], amt, epoch, seq)
        if verb == "U20APPROVE":
            return replica.execute_uat_approve(p[0], p[1], amt, epoch, seq)
        if verb == "U20XFERFROM":
            return replica.execute_uat_transfer_from(p[0], p[1], p[2], amt, epoch, seq)
        raise InvalidValue(f"unknown action {verb}")

    def seal(self, outboxes: dict[int, list[ExecutedTx]]) -> OrderedBlock:
        for rollup in sorted(outboxes):
            broadcast(outboxes[rollup], rollup, self.coordinator)
        return self.coordinator.seal_epoch()

    def deliver(self, block: OrderedBlock) -> SyncRecord:
        record = SyncRecord(block.epoch, self.n)
        for rollup in sorted(self.replicas):
            record.record(rollup, sync(block, self.replicas[rollup]))
        return record

    def state_dump(self) -> list[str]:
        lines = []
        for i in sorted(self.erc20):
            lines += [f"ERC20 {i} {a} {v}" for a, v in sorted(self.erc20[i].balances.items())]
        return lines + self.replicas[1].dump_lines()

    def clone(self) -> "World":
        return copy.deepcopy(self)


# -- invariant checks ------------------------------------------------------------


def check_convergence(replicas: Sequence[Replica]) -> tuple[bool, str]:
    """True iff every replica has the same digest; otherwise name the first differing slot."""
    if not replicas:
        return True, ""
    epochs = {r.epoch for r in replicas}
    if len(epochs) > 1:
        raise EpochMismatch(f"replicas at epochs {sorted(epochs)}")
    ref = replicas[0]
    ref_digest = state_digest(ref)
    for other in replicas[1:]:
        if state_digest(other) == ref_digest:
            continue
        a, b = ref.canonical_state(), other.canonical_state()
        for x, y in itertools.zip_longest(a, b, fillvalue="<absent>"):
            if x != y:
                return False, f"R{ref.rollup}: {x} | R{other.rollup}: {y}"
    return True, ""


def _mirror_diff(world: World) -> str:
    for replica in world.replicas.values():
        for i, state in world.erc20.items():
            if replica.book.b_e[i] != state.balances:
                return (
                    f"R{replica.rollup} mirror of rollup {i}: {replica.book.b_e[i]} "
                    f"vs ERC20 {state.balances}"
                )
    return ""


def check_epoch(world: World, record: SyncRecord) -> dict[str, str]:
    """Run every per-epoch check; map invariant name to a diagnostic ('' means pass)."""
    replicas = [world.replicas[i] for i in sorted(world.replicas)]
    problems = {}
    agg = [f"R{r.rollup} {msg}" for r in replicas for msg in r.book.aggregation_violations()]
    problems["aggregation"] = "; ".join(agg)
    supplies = {r.rollup: r.book.global_supply() for r in replicas}
    problems["global_supply_conservation"] = "; ".join(
        f"R{i} supply {s} != {world.global_supply}"
        for i, s in supplies.items()
        if s != world.global_supply
    )
    problems["local_supply_conservation"] = "; ".join(
        f"rollup {i} supply {s.total_supply()} != {world.local_supply[i]}"
        for i, s in world.erc20.items()
        if s.total_supply() != world.local_supply[i]
    )
    _, problems["digest_equality"] = check_convergence(replicas)
    problems["status_agreement"] = "" if record.complete else "replicas disagree on statuses"
    problems["mirror_equality"] = _mirror_diff(world)
    return problems


def check_arbitration_permutations(world: World, block: OrderedBlock) -> str:
    """Commit every ordering of a small block on copies of all replicas.

    Every T_U ordering must leave the replicas convergent and agreeing on statuses;
    every T_E ordering must leave the post-commitE book unchanged. Returns a
    diagnostic, empty when all orderings pass.
    """
    base = world.replicas[1].clone()
    base.commit_e(block.t_e)
    if len(block.t_e) <= MAX_PERMUTED_TE:
        te_orders = itertools.permutations(block.t_e)
    else:
        te = list(block.t_e)
        te_orders = [te[::-1]] + [te[k:] + te[:k] for k in range(1, len(te))]
    for perm in te_orders:
        probe = world.replicas[1].clone()
        probe.commit_e(perm)
        if probe.book != base.book:
            return f"T_E order {[e.tx_id for e in perm]} changes the post-commitE book"
    for perm in itertools.permutations(block.t_u):
        trial = world.clone()
        permuted = OrderedBlock(block.epoch, block.t_e, perm)
        record = trial.deliver(permuted)
        problems = check_epoch(trial, record)
        bad = {k: v for k, v in problems.items() if v}
        if bad:
            return f"T_U order {[e.tx_id for e in perm]}: {bad}"
    return ""


def run_scenario(scenario: Scenario, permutation_oracle: bool = False) -> RunReport:
    """Run every epoch of ``scenario``; raise InvariantViolation (with ``.report``) on failure."""
    world = World(scenario)
    report = RunReport(scenario.n)
    verdicts = dict.fromkeys(INVARIANTS[:-1], "PASS")
    if permutation_oracle:
        verdicts["arbitration_permutations"] = "PASS"
    report.invariants = verdicts

    def abort(name: str, epoch: int, diag: str) -> None:
        verdicts[name] = "FAIL"
        report.error = f"invariant_violation({name}, {epoch})"
        report.final_state = world.state_dump()
        exc = InvariantViolation(name, epoch, diag)
        exc.report = report
        raise exc

    # genesis must already satisfy every invariant
    for name, diag in check_epoch(world, SyncRecord(0, world.n)).items():
        if diag and name != "status_agreement":
            abort(name, 0, diag)

    for actions in scenario.epochs:
        executed, outboxes = world.execute(actions)
        block = world.seal(outboxes)
        if permutation_oracle and len(block.t_u) <= MAX_PERMUTED_TU:
            diag = check_arbitration_permutations(world, block)
            if diag:
                abort("arbitration_permutations", block.epoch, diag)
            report.permuted_epochs += 1
        try:
            record = world.deliver(block)
        except CommitDesync as exc:
            abort("commit_desync", block.epoch, exc.detail)
        trace = [
            sync_trace_line(block.epoch, i, record.statuses[i]) for i in sorted(record.statuses)
        ]
        report.epochs.append(EpochResult(block.epoch, executed, block, record.statuses[1], trace))
        for name, diag in check_epoch(world, record).items():
            if diag:
                abort(name, block.epoch, diag)

    report.final_state = world.state_dump()
    report.digest = state_digest(world.replicas[1])
    return report


# -- seeded fuzzing ---------------------------------------------------------------


@dataclass(frozen=True)
class FuzzConfig:
    n: int = 3
    users: int = 5
    epochs: int = 10
    txs_per_epoch: int = 8
    max_amount: int = 100
    overdraft_rate: float = 0.25

    def validate(self) -> "FuzzConfig":
        for name in ("n", "users", "epochs", "txs_per_epoch"):
            if getattr(self, name) < 1:
                raise InvalidValue(f"{name} must be positive")
        if self.max_amount < 0:
            raise InvalidValue("max_amount must be non-negative")
        if not 0.0 <= self.overdraft_rate <= 1.0:
            raise InvalidValue("overdraft_rate must lie in [0, 1]")
        return self


# verb, weight
FUZZ_MIX = (
    ("E20XFER", 25),
    ("E20XFERFROM", 10),
    ("E20APPROVE", 10),
    ("U20XFER", 35),
    ("U20XFERFROM", 10),
    ("U20APPROVE", 10),
)


def generate_scenario(seed: int, cfg: FuzzConfig) -> Scenario:
    """Build a scenario from ``seed`` using only ``random.Random`` (MT19937).

    Draw order, which fixes the output for a given seed and config:

    1. users are ``address_from_int(1..users)``;
    2. for each user, for each rollup 1..n: genesis ``randint(0, max_amount // 2)``;
    3. for each user: policy ``sample(range(1, n + 1), n)``;
    4. for each epoch, for each of ``txs_per_epoch`` actions: rollup ``randint(1, n)``,
       verb ``choices(FUZZ_MIX)``, one ``choice(users)`` per party, amount
       ``randint(0, max_amount)``; then for U20XFER one ``random()`` draw which,
       below ``overdraft_rate``, turns the action into an overdraft attempt by the
       epoch's previous UAT20 sender (if any) for the full ``max_amount``.
    """
    cfg.validate()
    rng = random.Random(seed)
    users = [address_from_int(k) for k in range(1, cfg.users + 1)]
    genesis = []
    for user in users:
        for rollup in range(1, cfg.n + 1):
            amount = rng.randint(0, cfg.max_amount // 2)
            if amount:
                genesis.append((rollup, user, amount))
    policies = [DeductionPolicy(u, tuple(rng.sample(range(1, cfg.n + 1), cfg.n))) for u in users]
    verbs = [v for v, _ in FUZZ_MIX]
    weights = [w for _, w in FUZZ_MIX]
    epochs = []
    for _ in range(cfg.epochs):
        actions = []
        last_uat_sender = None
        for _ in range(cfg.txs_per_epoch):
            rollup = rng.randint(1, cfg.n)
            verb = rng.choices(verbs, weights)[0]
            arity = 3 if verb.endswith("XFERFROM") else 2
            parties = [rng.choice(users) for _ in range(arity)]
            amount = rng.randint(0, cfg.max_amount)
            if verb == "U20XFER":
                if rng.random() < cfg.overdraft_rate:
                    amount = cfg.max_amount
                    if last_uat_sender is not None:
                        parties[0] = last_uat_sender
                last_uat_sender = parties[0]
            actions.append(Action(rollup, verb, tuple(parties), amount))
        epochs.append(actions)
    return Scenario(cfg.n, genesis, policies, epochs)


def fuzz(seed: int, cfg: FuzzConfig, permutation_oracle: bool = False) -> RunReport:
    """Generate and run one seeded scenario; violations carry the seed for replay."""
    scenario = generate_scenario(seed, cfg)
    try:
        return run_scenario(scenario, permutation_oracle)
    except InvariantViolation as exc:
        exc.seed = seed
        raise
