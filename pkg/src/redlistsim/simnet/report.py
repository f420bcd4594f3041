"""Simulation reports: chain rendering, per-miner accounting, text and CSV output.

CSV columns (one row per recorded step and node)::

    step,node,active_height,active_chain,tips,mempool,folds

``active_chain`` uses the bracket notation ``[...]-[T1]-[T2]``; ``tips``
counts the branches a node knows (leaf tips plus the active tip);
``mempool`` lists pending labels separated by ``;``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from ..chain import BlockIndex
from ..mining import BLOCK_REWARD
from .node import Network, Node

CSV_COLUMNS = ("step", "node", "active_height", "active_chain", "tips", "mempool", "folds")


def render_chain(index: BlockIndex, tip: bytes) -> str:
    return "-".join(f"[{b.label}]" for b in index.branch_of(tip))


def tx_label(tx) -> str:
    return tx.label or tx.id.hex()[:8]


@dataclass(frozen=True)
class NodeSnapshot:
    active: str
    branches: tuple[str, ...]
    mempool: tuple[str, ...]
    folds: int
    height: int

    @classmethod
    def of(cls, node: Node) -> "NodeSnapshot":
        idx = node.index
        return cls(
            active=render_chain(idx, node.active_tip),
            branches=tuple(sorted(render_chain(idx, t) for t in idx.tips | {node.active_tip})),
            mempool=tuple(tx_label(tx) for tx in node.mempool.ordered()),
            folds=node.folds,
            height=idx.height(node.active_tip),
        )

    def render(self, name: str) -> str:
        lines = [f"{name}:"]
        for branch in self.branches:
            mark = "*" if branch == self.active else " "
            lines.append(f"  {mark} {branch}")
        lines.append(f"    mempool: {', '.join(self.mempool) or '-'}")
        return "\n".join(lines)


@dataclass(frozen=True)
class MinerStats:
    mined: int
    on_chain: int
    orphaned: int

    @property
    def rewards(self) -> int:
        return self.on_chain * BLOCK_REWARD


def miner_stats(network: Network) -> tuple[str, dict[str, MinerStats]]:
    ref = network.reference_node()
    on_chain = {b.id for b in ref.index.branch_of(ref.active_tip)}
    stats = {}
    for node in network:
        if not node.mined:
            continue
        kept = sum(1 for bid in node.mined if bid in on_chain)
        stats[node.name] = MinerStats(len(node.mined), kept, len(node.mined) - kept)
    return ref.name, stats


@dataclass(frozen=True)
class AssertionFailure:
    step: int
    node: str
    field: str
    expected: object
    actual: object

    def __str__(self) -> str:
        return (f"step {self.step}: node {self.node} {self.field} mismatch\n"
                f"  expected: {self.expected}\n"
                f"  actual:   {self.actual}")


@dataclass
class SimReport:
    seed: int
    snapshots: list[tuple[int, dict[str, NodeSnapshot]]] = field(default_factory=list)
    miners: dict[str, MinerStats] = field(default_factory=dict)
    reference: str = ""
    fold_events: int = 0
    failures: list[AssertionFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def final(self) -> dict[str, NodeSnapshot]:
        return self.snapshots[-1][1] if self.snapshots else {}

    def at_step(self, step: int) -> dict[str, NodeSnapshot]:
        for s, snap in self.snapshots:
            if s == step:
                return snap
        raise KeyError(step)

    def to_text(self) -> str:
        out = [f"seed: {self.seed}"]
        for step, snap in self.snapshots:
            out.append(f"--- step {step} ---")
            out.extend(s.render(name) for name, s in snap.items())
        out.append("--- miners (reference chain: %s) ---" % self.reference)
        out.append(f"{'miner':<8} {'mined':>6} {'active':>6} {'orphan':>6} {'reward':>7}")
        for name, m in self.miners.items():
            out.append(f"{name:<8} {m.mined:>6} {m.on_chain:>6} {m.orphaned:>6} {m.rewards:>7}")
        out.append(f"fold events: {self.fold_events}")
        if self.failures:
            out.append("--- assertion failures ---")
            out.extend(str(f) for f in self.failures)
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for step, snap in self.snapshots:
            for name, s in snap.items():
                w.writerow([step, name, s.height, s.active, len(s.branches), ";".join(s.mempool), s.folds])
        return buf.getvalue()
