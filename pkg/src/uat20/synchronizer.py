"""Moves executed batches to the coordinator and sealed blocks back to every replica."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

from .coordinator import Coordinator
from .core import CommitStatus, ExecutedTx, OrderedBlock
from .errors import EpochGap
from .upsilon20 import Replica

log = logging.getLogger(__name__)


def broadcast(outbox: list[ExecutedTx], origin: int, coordinator: Coordinator) -> None:
    """Submit the rollup's executed transactions as one batch and empty the outbox.

    Rejected executions never reach the coordinator.
    """
    batch = []
    for etx in outbox:
        if etx.ok:
            batch.append(etx)
        else:
            log.warning("dropping rejected %s (%s) before broadcast", etx.tx_id, etx.reason)
    coordinator.submit_batch(origin, batch)
    outbox.clear()


def sync(block: OrderedBlock, replica: Replica) -> list[CommitStatus]:
    if replica.epoch != block.epoch - 1:
        raise EpochGap(
            f"replica R{replica.rollup} at epoch {replica.epoch} cannot apply block {block.epoch}"
        )
    statuses = replica.commit_e(block.t_e)
    statuses += replica.commit_u(block.t_u)
    replica.epoch = block.epoch
    return statuses


def sync_trace_line(epoch: int, rollup: int, statuses: list[CommitStatus]) -> str:
    return f"SYNC {epoch} -> R{rollup} [{','.join(map(str, statuses))}]"


class Delivery(enum.Enum):
    PENDING = "PENDING"
    DELIVERED = "DELIVERED"


@dataclass
class SyncRecord:
    epoch: int
    n: int
    delivery: dict[int, Delivery] = field(default_factory=dict)
    statuses: dict[int, list[CommitStatus]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for i in range(1, self.n + 1):
            self.delivery.setdefault(i, Delivery.PENDING)

    def record(self, rollup: int, statuses: list[CommitStatus]) -> None:
        self.delivery[rollup] = Delivery.DELIVERED
        self.statuses[rollup] = statuses

    @property
    def statuses_agree(self) -> bool:
        lists = list(self.statuses.values())
        return all(s == lists[0] for s in lists[1:])

    @property
    def complete(self) -> bool:
        delivered = all(d is Delivery.DELIVERED for d in self.delivery.values())
        return delivered and self.statuses_agree
