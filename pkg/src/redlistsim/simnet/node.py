"""Simulated nodes wired together by instant, lossless block broadcast."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..chain import Block, BlockIndex, KeyHash, Transaction
from ..forkchoice import ForkChoiceConfig, ForkChoiceState, TipDecision, on_new_tip
from ..mining import BLOCK_REWARD, Mempool, MinerPolicy, build_template
from ..redlist import Redlist, check_block, check_update

_EMPTY = Redlist()


@dataclass
class NodeSpec:
    name: str
    policy: MinerPolicy = field(default_factory=MinerPolicy)
    fork_cfg: ForkChoiceConfig = field(default_factory=ForkChoiceConfig)
    redlist_source: Optional[str] = None
    miner: bool = False


class Node:
    def __init__(self, spec: NodeSpec, key: Optional[KeyHash] = None):
        self.spec = spec
        self.name = spec.name
        self.key = key if key is not None else KeyHash.from_name(spec.name)
        self.policy = spec.policy
        self.cfg = spec.fork_cfg
        self.index = BlockIndex()
        self.fc = ForkChoiceState.fresh(self.index)
        self.mempool = Mempool()
        self.mined: list[bytes] = []
        self.folds = 0
        self.switches: list[TipDecision] = []

    @property
    def redlist(self) -> Redlist:
        if self.policy.abides_redlist and self.policy.redlist_ref is not None:
            return self.policy.redlist_ref
        return _EMPTY

    @property
    def active_tip(self) -> bytes:
        return self.fc.active_tip

    def receive_block(self, block: Block) -> list[TipDecision]:
        result = self.index.connect_block(block)
        if not result.accepted:
            return []
        redlist = self.redlist
        for bid in result.connected:
            # verdict frozen at connect time; later list changes are not retroactive
            self.fc.verdicts[bid] = check_block(redlist, self.index[bid])
        decisions = []
        for bid in result.connected:
            if bid not in self.index.tips:
                continue
            old_tip = self.fc.active_tip
            decision = on_new_tip(self.fc, self.index, bid, redlist, self.cfg)
            if decision.switch:
                self._after_switch(old_tip, decision)
                decisions.append(decision)
        return decisions

    def _after_switch(self, old_tip: bytes, decision: TipDecision) -> None:
        assert decision.new_tip is not None
        fork = self.index.common_ancestor(old_tip, decision.new_tip)
        confirmed = {tx.id for blk in self.index.segment(fork, decision.new_tip) for tx in blk.txs}
        self.mempool.remove(confirmed)
        if decision.returned_txs:
            self.mempool.return_txs(decision.returned_txs, self.index.tx_ids_on(decision.new_tip))
        if decision.folded:
            self.folds += 1
        self.switches.append(decision)

    def submit(self, tx: Transaction) -> None:
        if tx.id in self.index.tx_ids_on(self.active_tip):
            return
        self.mempool.submit(tx)

    def refresh_redlist(self) -> str:
        return check_update(self.redlist)

    def mine(self, max_txs: int = 1000) -> Block:
        """Build a template on the active tip and solve it (always succeeds)."""
        if self.policy.abides_redlist:
            self.refresh_redlist()
        template = build_template(self.mempool, self.policy, self.index, self.active_tip,
                                  max_txs, miner=self.name, miner_key=self.key, reward=BLOCK_REWARD)
        block = template.to_block()
        self.mined.append(block.id)
        return block


class Network:
    def __init__(self, nodes: Iterable[Node]):
        self.nodes: dict[str, Node] = {}
        for node in nodes:
            if node.name in self.nodes:
                raise ValueError(f"duplicate node name {node.name!r}")
            self.nodes[node.name] = node

    def __getitem__(self, name: str) -> Node:
        return self.nodes[name]

    def __iter__(self):
        return iter(self.nodes.values())

    def broadcast(self, block: Block, origin: Optional[str] = None) -> dict[str, list[TipDecision]]:
        order = list(self.nodes)
        if origin is not None:
            order.remove(origin)
            order.insert(0, origin)
        return {name: self.nodes[name].receive_block(block) for name in order}

    def mine(self, name: str, max_txs: int = 1000) -> Block:
        block = self.nodes[name].mine(max_txs)
        self.broadcast(block, origin=name)
        return block

    def reference_node(self) -> Node:
        """Node whose active chain carries the most work (first declared wins ties)."""
        best = None
        for node in self.nodes.values():
            tip = node.active_tip
            key = (node.index.work_of(tip), node.index.height(tip))
            if best is None or key > best[0]:
                best = (key, node)
        assert best is not None
        return best[1]
