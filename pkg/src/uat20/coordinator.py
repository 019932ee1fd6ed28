"""The base-layer coordinator: buffers per-rollup batches and seals them into ordered blocks."""

from __future__ import annotations

import threading
from typing import Sequence

from .core import ExecutedTx, OrderedBlock
from .errors import CoordinatorError, InvalidValue


class Coordinator:
    """Collects one batch per rollup per epoch, then emits the arbitration order.

    The total order sorts by ``(origin, seq)``; ERC20 and UAT20 transactions are
    then split into the two queues, each keeping its relative order.
    """

    def __init__(self, n: int, epoch: int = 1) -> None:
        if n < 1:
            raise InvalidValue("need at least one rollup")
        self.n = n
        self.epoch = epoch
        self.pending: dict[int, list[ExecutedTx]] = {}
        self._lock = threading.Lock()

    def __getstate__(self) -> dict:
        state = self.__dict__.copy()
        del state["_lock"]
        return state

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def submit_batch(self, origin: int, batch: Sequence[ExecutedTx]) -> None:
        with self._lock:
            if not 1 <= origin <= self.n:
                raise CoordinatorError("foreign_tx", f"unknown rollup {origin}")
            if origin in self.pending:
                raise CoordinatorError("duplicate_batch", f"rollup {origin}, epoch {self.epoch}")
            last = -1
            for etx in batch:
                if etx.tx.origin != origin:
                    raise CoordinatorError(
                        "foreign_tx", f"{etx.tx_id} submitted by rollup {origin}"
                    )
                if etx.tx.seq <= last:
                    raise CoordinatorError("unordered_batch", f"{etx.tx_id} after seq {last}")
                last = etx.tx.seq
            self.pending[origin] = list(batch)

    def seal_epoch(self) -> OrderedBlock:
        with self._lock:
            missing = [i for i in range(1, self.n + 1) if i not in self.pending]
            if missing:
                raise CoordinatorError("incomplete_epoch", f"no batch from rollups {missing}")
            ordered = sorted(
                (etx for batch in self.pending.values() for etx in batch),
                key=lambda e: e.tx.order_key,
            )
            block = OrderedBlock(
                self.epoch,
                tuple(e for e in ordered if e.tx.kind.is_erc20),
                tuple(e for e in ordered if e.tx.kind.is_uat20),
            )
            self.epoch += 1
            self.pending = {}
            return block


def block_summary(block: OrderedBlock) -> str:
    te = ",".join(e.tx_id for e in block.t_e)
    tu = ",".join(e.tx_id for e in block.t_u)
    return f"BLOCK {block.epoch} TE={te} TU={tu}"
