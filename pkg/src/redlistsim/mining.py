"""Mempool and block templates.

Pending transactions are kept in arrival order. Abiding miners skip tainted
transactions when filling a template but leave them pending.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .chain import Block, BlockIndex, KeyHash, Transaction
from .redlist import Redlist, check_transaction

BLOCK_REWARD = 25


class SubmitResult(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED_DUPLICATE = "rejected-duplicate"


@dataclass
class MinerPolicy:
    abides_redlist: bool = False
    redlist_ref: Optional[Redlist] = None
    hash_share: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.hash_share <= 1.0:
            raise ValueError(f"hash_share must lie in [0, 1], got {self.hash_share}")
        if self.abides_redlist and self.redlist_ref is None:
            self.redlist_ref = Redlist()

    def screens(self, tx: Transaction) -> bool:
        """True when this policy keeps ``tx`` out of templates."""
        if not self.abides_redlist or self.redlist_ref is None:
            return False
        return check_transaction(self.redlist_ref, tx).tainted


class Mempool:
    def __init__(self) -> None:
        self.pending: dict[bytes, Transaction] = {}
        self.seen_ids: set[bytes] = set()
        self._arrival: dict[bytes, int] = {}
        self._counter = itertools.count()

    def __len__(self) -> int:
        return len(self.pending)

    def __contains__(self, tx_id: object) -> bool:
        return tx_id in self.pending

    def __iter__(self) -> Iterator[Transaction]:
        return iter(self.ordered())

    def ordered(self) -> list[Transaction]:
        return sorted(self.pending.values(), key=lambda tx: self._arrival[tx.id])

    def submit(self, tx: Transaction) -> SubmitResult:
        if tx.id in self.seen_ids:
            return SubmitResult.REJECTED_DUPLICATE
        self.seen_ids.add(tx.id)
        self._arrival[tx.id] = next(self._counter)
        self.pending[tx.id] = tx
        return SubmitResult.ACCEPTED

    def remove(self, tx_ids: Iterable[bytes]) -> None:
        for tx_id in tx_ids:
            self.pending.pop(tx_id, None)

    def return_txs(self, txs: Iterable[Transaction], active_tx_ids: set[bytes]) -> list[Transaction]:
        """Put transactions from an abandoned segment back, unless already confirmed."""
        restored = []
        for tx in txs:
            if tx.is_coinbase or tx.id in active_tx_ids or tx.id in self.pending:
                continue
            self.seen_ids.add(tx.id)
            # transactions this pool never saw go to the back of the queue
            self._arrival.setdefault(tx.id, next(self._counter))
            self.pending[tx.id] = tx
            restored.append(tx)
        return restored


def submit_tx(pool: Mempool, tx: Transaction, policy: Optional[MinerPolicy] = None) -> SubmitResult:
    # screening happens at template time, so policy does not affect admission
    return pool.submit(tx)


@dataclass(frozen=True)
class BlockTemplate:
    parent_id: bytes
    height: int
    miner: str
    txs: tuple[Transaction, ...]
    skipped_tainted: tuple[bytes, ...] = ()

    @property
    def payload(self) -> tuple[Transaction, ...]:
        """Template transactions without the coinbase."""
        return tuple(tx for tx in self.txs if not tx.is_coinbase)

    def to_block(self, nonce: int = 0, work: int = 1) -> Block:
        return Block.create(self.parent_id, self.height, self.txs, self.miner, nonce, work)


def build_template(
    pool: Mempool,
    policy: MinerPolicy,
    index: BlockIndex,
    parent_tip: bytes,
    max_txs: int = 1000,
    miner: str = "",
    miner_key: Optional[KeyHash] = None,
    reward: int = BLOCK_REWARD,
) -> BlockTemplate:
    parent = index[parent_tip]
    on_branch = index.tx_ids_on(parent_tip)
    chosen: list[Transaction] = []
    skipped: list[bytes] = []
    for tx in pool.ordered():
        if len(chosen) >= max_txs:
            break
        if tx.id in on_branch:
            continue
        if policy.screens(tx):
            skipped.append(tx.id)
            continue
        chosen.append(tx)
    txs: list[Transaction] = []
    if miner_key is not None:
        tag = parent.id + miner.encode()
        txs.append(Transaction.coinbase(miner_key, reward, tag))
    txs.extend(chosen)
    return BlockTemplate(parent.id, parent.height + 1, miner, tuple(txs), tuple(skipped))


def return_to_pool(pool: Mempool, returned_txs: Iterable[Transaction],
                   index: Optional[BlockIndex] = None) -> Mempool:
    active = index.tx_ids_on(index.active_tip) if index is not None else set()
    pool.return_txs(returned_txs, active)
    return pool
