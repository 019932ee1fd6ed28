"""Replicated multi-rollup token ledger: ERC20 per rollup, UAT20 replicas, Execute-Commit epochs."""

from .coordinator import Coordinator
from .core import (
    CommitStatus,
    ExecutedTx,
    GlobalSlot,
    LocalSlot,
    Operation,
    OrderedBlock,
    Transaction,
    TxKind,
)
from .harness import FuzzConfig, RunReport, World, check_convergence, fuzz, run_scenario
from .scenario import Scenario, load_scenario, parse_scenario
from .sigma20 import Erc20State
from .synchronizer import broadcast, sync
from .upsilon20 import BalanceBook, DeductionPolicy, Replica, resolve_deduction, state_digest

__all__ = [
    "BalanceBook",
    "CommitStatus",
    "Coordinator",
    "DeductionPolicy",
    "Erc20State",
    "ExecutedTx",
    "FuzzConfig",
    "GlobalSlot",
    "LocalSlot",
    "Operation",
    "OrderedBlock",
    "Replica",
    "RunReport",
    "Scenario",
    "Transaction",
    "TxKind",
    "World",
    "broadcast",
    "check_convergence",
    "fuzz",
    "load_scenario",
    "parse_scenario",
    "resolve_deduction",
    "run_scenario",
    "state_digest",
    "sync",
]
