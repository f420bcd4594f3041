"""Split-redlist attack: an attacker key listed by group B but not by group A.

Each group is modelled as one pooled miner. Every injection interval the
attacker broadcasts a fresh transaction spending from its key; A mines it,
B refuses it and holds its clean branch until A's tainted branch leads by
more than B's switching threshold.

Config (YAML or dict)::

    seed: 7
    blocks: 200               # block intervals to simulate
    injection: continuous     # none | single | continuous
    inject_at: 0              # first interval with an injection (single/continuous)
    groups:
      A: {share: 0.7, threshold: 2, redlist: []}
      B: {share: 0.3, threshold: 2, redlist: [Q]}
    attacker: Q
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ..chain import KeyHash, Transaction
from ..forkchoice import ForkChoiceConfig
from ..mining import MinerPolicy
from ..redlist import Redlist
from .node import Network, Node, NodeSpec


class AttackConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GroupSpec:
    name: str
    share: float
    threshold: int = 2
    redlist: tuple[str, ...] = ()


@dataclass(frozen=True)
class AttackConfig:
    a: GroupSpec
    b: GroupSpec
    attacker: str = "Q"
    blocks: int = 200
    injection: str = "continuous"
    inject_at: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.injection not in ("none", "single", "continuous"):
            raise AttackConfigError(f"unknown injection mode {self.injection!r}")
        for g in (self.a, self.b):
            if not 0.0 < g.share <= 1.0:
                raise AttackConfigError(f"group {g.name}: share must lie in (0, 1]")
            if g.threshold < 1:
                raise AttackConfigError(f"group {g.name}: threshold must be >= 1")
        if self.a.share + self.b.share > 1.0 + 1e-9:
            raise AttackConfigError("group shares sum to more than 1")
        if self.a.share <= self.b.share:
            raise AttackConfigError("group A must hold the larger hash share")
        if self.attacker not in self.b.redlist:
            raise AttackConfigError("attacker key must be on B's redlist")
        if self.attacker in self.a.redlist:
            raise AttackConfigError("attacker key must not be on A's redlist")
        if self.blocks < 0:
            raise AttackConfigError("blocks must be >= 0")

    def injects(self, interval: int) -> bool:
        if self.injection == "none":
            return False
        if self.injection == "single":
            return interval == self.inject_at
        return interval >= self.inject_at


def parse_attack(data: Any) -> AttackConfig:
    if not isinstance(data, dict):
        raise AttackConfigError("attack config must be a mapping")
    try:
        groups = data["groups"]
        specs = []
        for name in ("A", "B"):
            g = groups[name]
            specs.append(GroupSpec(name, float(g["share"]), int(g.get("threshold", 2)),
                                   tuple(str(k) for k in g.get("redlist", []))))
        return AttackConfig(specs[0], specs[1], str(data.get("attacker", "Q")),
                            int(data.get("blocks", 200)), str(data.get("injection", "continuous")),
                            int(data.get("inject_at", 0)), int(data.get("seed", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, AttackConfigError):
            raise
        raise AttackConfigError(f"bad attack config: {exc}") from exc


def load_attack(path: str | os.PathLike) -> AttackConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise AttackConfigError(str(exc)) from exc
    return parse_attack(data)


@dataclass
class AttackReport:
    seed: int
    blocks: int
    injections: int
    b_mined: int
    b_on_chain: int
    b_wasted: int
    a_mined: int
    a_on_chain: int
    b_folds: int
    fork_lengths: list[int] = field(default_factory=list)
    orphans_per_fold: list[int] = field(default_factory=list)

    @property
    def a_dominance(self) -> float:
        total = self.a_on_chain + self.b_on_chain
        return self.a_on_chain / total if total else 0.0

    def to_text(self) -> str:
        lines = [
            f"seed: {self.seed}",
            f"block intervals: {self.blocks}",
            f"injections: {self.injections}",
            f"A mined {self.a_mined}, on final chain {self.a_on_chain}",
            f"B mined {self.b_mined}, on final chain {self.b_on_chain}, wasted {self.b_wasted}",
            f"B folds: {self.b_folds}",
            f"fork lengths (tainted lead when B folded): {self.fork_lengths}",
            f"B blocks orphaned per fold: {self.orphans_per_fold}",
            f"A share of final chain: {self.a_dominance:.3f}",
        ]
        return "\n".join(lines) + "\n"


def run_attack(cfg: AttackConfig, seed: Optional[int] = None) -> AttackReport:
    seed = cfg.seed if seed is None else seed
    rng = np.random.Generator(np.random.PCG64(seed))
    keys = {name: KeyHash.from_name(name) for name in (cfg.attacker, "A", "B", "sink")}

    def group_node(g: GroupSpec) -> Node:
        redlist = Redlist(frozenset(keys.get(k) or KeyHash.from_name(k) for k in g.redlist))
        spec = NodeSpec(g.name, MinerPolicy(True, redlist, g.share), ForkChoiceConfig(g.threshold),
                        miner=True)
        return Node(spec, keys[g.name])

    a, b = group_node(cfg.a), group_node(cfg.b)
    net = Network([a, b])
    p_a = cfg.a.share / (cfg.a.share + cfg.b.share)
    injections = 0
    fork_lengths: list[int] = []
    orphans_per_fold: list[int] = []
    b_mined_ids = set()

    for interval in range(cfg.blocks):
        if cfg.injects(interval):
            injections += 1
            tq = Transaction.create([keys[cfg.attacker]], [keys["sink"]], 1,
                                    nonce=f"tq:{injections}", label=f"Tq{injections}")
            a.submit(tq)
            b.submit(tq)
        miner = a if rng.random() < p_a else b
        old_b_tip = b.active_tip
        folds_before = b.folds
        block = net.mine(miner.name)
        if miner is b:
            b_mined_ids.add(block.id)
        if b.folds > folds_before:
            decision = b.switches[-1]
            assert decision.challenger is not None and decision.incumbent is not None
            fork_lengths.append(decision.challenger.height - decision.incumbent.height)
            fork = b.index.common_ancestor(old_b_tip, b.active_tip)
            orphans_per_fold.append(sum(1 for blk in b.index.segment(fork, old_b_tip)
                                        if blk.id in b_mined_ids))

    ref = net.reference_node()
    chain = {blk.id for blk in ref.index.branch_of(ref.active_tip)}
    a_on = sum(1 for bid in a.mined if bid in chain)
    b_on = sum(1 for bid in b.mined if bid in chain)
    return AttackReport(seed, cfg.blocks, injections, len(b.mined), b_on, len(b.mined) - b_on,
                        len(a.mined), a_on, b.folds, fork_lengths, orphans_per_fold)
