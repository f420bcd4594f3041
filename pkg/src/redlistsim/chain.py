"""Hash-linked block and transaction model plus a block index that keeps every branch.

The index never picks a tip on its own: ``connect_block`` files blocks away
(staging orphans until their parent shows up) and fork choice decides which
tip is active.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

KEY_HASH_SIZE = 20
DIGEST_SIZE = 32
NULL_ID = bytes(DIGEST_SIZE)


def sha256d(data: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


class KeyHash(bytes):
    """Opaque 20-byte public-key hash; the unit of redlisting."""

    def __new__(cls, value: bytes) -> "KeyHash":
        value = bytes(value)
        if len(value) != KEY_HASH_SIZE:
            raise ValueError(f"KeyHash must be {KEY_HASH_SIZE} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "KeyHash":
        return cls(bytes.fromhex(text))

    @classmethod
    def from_name(cls, name: str) -> "KeyHash":
        """Deterministic key for a named actor (``"W"``, ``"R"``, ...)."""
        return cls(hashlib.sha256(b"key:" + name.encode()).digest()[:KEY_HASH_SIZE])

    def __repr__(self) -> str:
        return f"KeyHash({self.hex()[:12]}..)"


@dataclass(frozen=True)
class Transaction:
    id: bytes
    input_keys: tuple[KeyHash, ...]
    output_keys: tuple[KeyHash, ...]
    amount: int
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.id) != DIGEST_SIZE:
            raise ValueError("transaction id must be 32 bytes")
        if not self.output_keys:
            raise ValueError("transaction needs at least one output key")

    @property
    def is_coinbase(self) -> bool:
        return not self.input_keys

    @classmethod
    def create(
        cls,
        input_keys: Sequence[KeyHash],
        output_keys: Sequence[KeyHash],
        amount: int,
        nonce: bytes | str = b"",
        label: str = "",
    ) -> "Transaction":
        if isinstance(nonce, str):
            nonce = nonce.encode()
        payload = b"".join(
            [
                struct.pack("<II", len(input_keys), len(output_keys)),
                *input_keys,
                *output_keys,
                struct.pack("<q", amount),
                nonce,
            ]
        )
        return cls(sha256d(payload), tuple(input_keys), tuple(output_keys), amount, label)

    @classmethod
    def coinbase(cls, miner_key: KeyHash, reward: int, tag: bytes) -> "Transaction":
        return cls.create((), (miner_key,), reward, nonce=b"coinbase:" + tag, label="")


def merkle_root(tx_ids: Sequence[bytes]) -> bytes:
    if not tx_ids:
        return NULL_ID
    level = list(tx_ids)
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [sha256d(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def digest_block(parent_id: bytes, txs: Sequence[Transaction], nonce: int, work: int) -> bytes:
    """Block id: double SHA-256 over parent id, tx merkle root, nonce and work."""
    header = parent_id + merkle_root([tx.id for tx in txs]) + struct.pack("<QQ", nonce, work)
    return sha256d(header)


@dataclass(frozen=True)
class Block:
    id: bytes
    parent_id: bytes
    height: int
    work: int
    miner: str
    nonce: int
    txs: tuple[Transaction, ...]

    @classmethod
    def create(
        cls,
        parent_id: bytes,
        height: int,
        txs: Sequence[Transaction] = (),
        miner: str = "",
        nonce: int = 0,
        work: int = 1,
    ) -> "Block":
        txs = tuple(txs)
        return cls(digest_block(parent_id, txs, nonce, work), parent_id, height, work, miner, nonce, txs)

    @property
    def label(self) -> str:
        """Labels of the non-coinbase transactions, ``"..."`` when there are none."""
        names = [tx.label or tx.id.hex()[:8] for tx in self.txs if not tx.is_coinbase]
        return ",".join(names) if names else "..."

    def meets_target(self, target: int) -> bool:
        return int.from_bytes(self.id, "big") < target


def make_genesis() -> Block:
    return Block.create(NULL_ID, 0)


GENESIS = make_genesis()
# pinned by tests/test_chain.py
GENESIS_ID_HEX = GENESIS.id.hex()


def solve_pow(parent_id: bytes, height: int, txs: Sequence[Transaction], target: int,
              miner: str = "", work: int = 1, start_nonce: int = 0) -> Block:
    """Grind nonces until the block id falls below ``target``."""
    nonce = start_nonce
    while True:
        block = Block.create(parent_id, height, txs, miner, nonce, work)
        if block.meets_target(target):
            return block
        nonce += 1


class ConnectStatus(enum.Enum):
    EXTENDS_TIP = "accepted-extends-tip"
    NEW_BRANCH = "accepted-new-branch"
    ORPHAN = "staged-orphan"
    REJECTED = "rejected"


class RejectCode(enum.Enum):
    DIGEST_MISMATCH = 1
    DUPLICATE_BLOCK = 2
    DUPLICATE_TX = 3
    POW_FAILURE = 4
    BAD_HEIGHT = 5
    BAD_GENESIS = 6
    BAD_WORK = 7


@dataclass
class ConnectResult:
    status: ConnectStatus
    error: Optional[RejectCode] = None
    connected: list[bytes] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.status in (ConnectStatus.EXTENDS_TIP, ConnectStatus.NEW_BRANCH)


class UnknownBlockError(KeyError):
    pass


class BlockIndex:
    """Every known block, including those on branches nobody is mining on."""

    def __init__(self, genesis: Block = GENESIS, pow_target: Optional[int] = None):
        if genesis.parent_id != NULL_ID or genesis.height != 0:
            raise ValueError("genesis must have height 0 and a null parent")
        self.genesis = genesis
        self.pow_target = pow_target
        self.blocks: dict[bytes, Block] = {genesis.id: genesis}
        self.children: dict[bytes, list[bytes]] = {genesis.id: []}
        self.tips: set[bytes] = {genesis.id}
        self.active_tip: bytes = genesis.id
        self.chain_work: dict[bytes, int] = {genesis.id: genesis.work}
        self.orphans: dict[bytes, dict[bytes, Block]] = {}
        self._tx_blocks: dict[bytes, list[bytes]] = {}

    def __contains__(self, block_id: bytes) -> bool:
        return block_id in self.blocks

    def __getitem__(self, block_id: bytes) -> Block:
        try:
            return self.blocks[block_id]
        except KeyError:
            raise UnknownBlockError(block_id.hex()) from None

    def __len__(self) -> int:
        return len(self.blocks)

    def _validate(self, b: Block) -> Optional[RejectCode]:
        if b.id in self.blocks or b.id in self.orphans.get(b.parent_id, {}):
            return RejectCode.DUPLICATE_BLOCK
        if b.work < 1:
            return RejectCode.BAD_WORK
        if digest_block(b.parent_id, b.txs, b.nonce, b.work) != b.id:
            return RejectCode.DIGEST_MISMATCH
        if self.pow_target is not None and not b.meets_target(self.pow_target):
            return RejectCode.POW_FAILURE
        if b.parent_id == NULL_ID:
            return RejectCode.BAD_GENESIS
        return None

    def connect_block(self, b: Block) -> ConnectResult:
        err = self._validate(b)
        if err is not None:
            return ConnectResult(ConnectStatus.REJECTED, err)
        if b.parent_id not in self.blocks:
            self.orphans.setdefault(b.parent_id, {})[b.id] = b
            return ConnectResult(ConnectStatus.ORPHAN)

        extends_active = b.parent_id == self.active_tip
        err = self._attach(b)
        if err is not None:
            return ConnectResult(ConnectStatus.REJECTED, err)
        connected = [b.id]
        # pull in any staged descendants
        queue = [b.id]
        while queue:
            parent = queue.pop()
            for child in sorted(self.orphans.pop(parent, {}).values(), key=lambda x: x.id):
                if self._attach(child) is None:
                    connected.append(child.id)
                    queue.append(child.id)
        status = ConnectStatus.EXTENDS_TIP if extends_active else ConnectStatus.NEW_BRANCH
        return ConnectResult(status, None, connected)

    def _attach(self, b: Block) -> Optional[RejectCode]:
        parent = self.blocks[b.parent_id]
        if b.height != parent.height + 1:
            return RejectCode.BAD_HEIGHT
        seen = set()
        for tx in b.txs:
            if tx.id in seen or self._tx_on_branch(tx.id, parent.id):
                return RejectCode.DUPLICATE_TX
            seen.add(tx.id)
        self.blocks[b.id] = b
        self.children[b.id] = []
        bisect.insort(self.children[parent.id], b.id)
        self.tips.discard(parent.id)
        self.tips.add(b.id)
        self.chain_work[b.id] = self.chain_work[parent.id] + b.work
        for tx in b.txs:
            self._tx_blocks.setdefault(tx.id, []).append(b.id)
        return None

    def _tx_on_branch(self, tx_id: bytes, tip: bytes) -> bool:
        for holder in self._tx_blocks.get(tx_id, ()):
            if self.is_ancestor(holder, tip):
                return True
        return False

    def ancestor_at(self, block_id: bytes, height: int) -> bytes:
        b = self[block_id]
        if height > b.height or height < 0:
            raise ValueError(f"no ancestor at height {height} below height {b.height}")
        while b.height > height:
            b = self.blocks[b.parent_id]
        return b.id

    def is_ancestor(self, ancestor: bytes, block_id: bytes) -> bool:
        """True when ``ancestor`` lies on the branch ending at ``block_id`` (inclusive)."""
        a = self[ancestor]
        b = self[block_id]
        if a.height > b.height:
            return False
        return self.ancestor_at(block_id, a.height) == ancestor

    def walk_back(self, tip: bytes, stop: Optional[bytes] = None) -> Iterator[Block]:
        """Yield blocks from ``tip`` towards genesis, excluding ``stop``."""
        b = self[tip]
        while True:
            if b.id == stop:
                return
            yield b
            if b.parent_id == NULL_ID:
                return
            b = self.blocks[b.parent_id]

    def branch_of(self, tip: bytes) -> list[Block]:
        chain = list(self.walk_back(tip))
        chain.reverse()
        return chain

    def segment(self, ancestor: bytes, tip: bytes) -> list[Block]:
        """Blocks strictly after ``ancestor`` up to and including ``tip``, oldest first."""
        if not self.is_ancestor(ancestor, tip):
            raise ValueError("segment start is not an ancestor of the tip")
        seg = list(self.walk_back(tip, stop=ancestor))
        seg.reverse()
        return seg

    def common_ancestor(self, tip_a: bytes, tip_b: bytes) -> bytes:
        a, b = self[tip_a], self[tip_b]
        while a.height > b.height:
            a = self.blocks[a.parent_id]
        while b.height > a.height:
            b = self.blocks[b.parent_id]
        while a.id != b.id:
            a = self.blocks[a.parent_id]
            b = self.blocks[b.parent_id]
        return a.id

    def height(self, block_id: bytes) -> int:
        return self[block_id].height

    def work_of(self, block_id: bytes) -> int:
        if block_id not in self.chain_work:
            raise UnknownBlockError(block_id.hex())
        return self.chain_work[block_id]

    def tx_ids_on(self, tip: bytes) -> set[bytes]:
        return {tx.id for blk in self.walk_back(tip) for tx in blk.txs}

    def snapshot(self) -> tuple:
        """Comparable summary of index contents (order of delivery does not matter)."""
        return (
            frozenset(self.blocks),
            tuple(sorted((k, tuple(v)) for k, v in self.children.items())),
            frozenset(self.tips),
            frozenset((p, frozenset(c)) for p, c in self.orphans.items() if c),
        )

    def connect_all(self, blocks: Iterable[Block]) -> list[ConnectResult]:
        return [self.connect_block(b) for b in blocks]
