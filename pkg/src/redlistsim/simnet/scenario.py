"""Scripted scenarios.

A scenario file is YAML with these keys:

``seed``
    integer, drives ``mine_stochastic`` rounds (default 0)
``threshold``
    default switching threshold for every node (default 2)
``work_metric``
    ``block-count`` (default) or ``cumulative-work``
``prefix_blocks``
    clean blocks shared by every node before the first event (default 0)
``keys``
    list of actor names, or a mapping ``name: <40 hex chars>``. Node names
    are keys automatically.
``redlists``
    mapping ``name: {keys: [actor, ...]}`` or ``name: {source: path-or-url}``
``nodes``
    list of ``{name, miner, abides, redlist, share, threshold}``
``events``
    list of ``{step, action, ...}`` or ``{step, actions: [...]}``; steps must
    strictly increase. Actions:

    - ``send_tx``: ``from``, ``to``, ``via``, optional ``label``, ``amount``
    - ``mine``: ``node``
    - ``mine_stochastic``: ``rounds``
    - ``inject_redlist_entry``: ``list``, ``key``
    - ``assert_state``: ``node`` plus any of ``active`` (chain string),
      ``branches`` (list of chain strings), ``mempool`` (list of labels),
      ``folds`` (int)

A snapshot of every node is taken before the first event (step 0) and after
each step.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ..chain import Block, KeyHash, Transaction
from ..forkchoice import ForkChoiceConfig, WorkMetric
from ..mining import MinerPolicy
from ..redlist import Redlist, build_redlist
from .node import Network, Node, NodeSpec
from .report import AssertionFailure, NodeSnapshot, SimReport, miner_stats

PREFIX_KEY = KeyHash.from_name("__prefix__")
ACTIONS = ("send_tx", "mine", "mine_stochastic", "inject_redlist_entry", "assert_state")


class ScenarioError(ValueError):
    """The scenario file is malformed or references unknown names."""


@dataclass
class ScenarioEvent:
    step: int
    action: str
    args: dict[str, Any]


@dataclass
class Scenario:
    seed: int = 0
    threshold: int = 2
    work_metric: WorkMetric = WorkMetric.BLOCK_COUNT
    prefix_blocks: int = 0
    keys: dict[str, KeyHash] = field(default_factory=dict)
    redlists: dict[str, Redlist] = field(default_factory=dict)
    nodes: list[NodeSpec] = field(default_factory=list)
    events: list[ScenarioEvent] = field(default_factory=list)

    def key(self, name: str) -> KeyHash:
        try:
            return self.keys[name]
        except KeyError:
            raise ScenarioError(f"unknown key {name!r}") from None


def _require(mapping: dict, key: str, where: str) -> Any:
    if key not in mapping:
        raise ScenarioError(f"{where}: missing {key!r}")
    return mapping[key]


def parse_scenario(data: Any, base_dir: Optional[Path] = None) -> Scenario:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping")
    unknown = set(data) - {"seed", "threshold", "work_metric", "prefix_blocks", "keys",
                           "redlists", "nodes", "events", "description"}
    if unknown:
        raise ScenarioError(f"unknown top-level keys: {sorted(unknown)}")
    try:
        sc = Scenario(
            seed=int(data.get("seed", 0)),
            threshold=int(data.get("threshold", 2)),
            work_metric=WorkMetric(data.get("work_metric", "block-count")),
            prefix_blocks=int(data.get("prefix_blocks", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc

    keys = data.get("keys") or []
    if isinstance(keys, dict):
        for name, hexval in keys.items():
            try:
                sc.keys[str(name)] = KeyHash.from_hex(str(hexval))
            except ValueError as exc:
                raise ScenarioError(f"key {name!r}: {exc}") from exc
    else:
        for name in keys:
            sc.keys[str(name)] = KeyHash.from_name(str(name))

    node_entries = data.get("nodes") or []
    for entry in node_entries:
        name = str(_require(entry, "name", "node"))
        sc.keys.setdefault(name, KeyHash.from_name(name))

    for name, entry in (data.get("redlists") or {}).items():
        entry = entry or {}
        if "source" in entry:
            src = Path(str(entry["source"]))
            if base_dir is not None and not src.is_absolute() and "://" not in str(src):
                src = base_dir / src
            try:
                sc.redlists[name] = build_redlist(src)
            except Exception as exc:
                raise ScenarioError(f"redlist {name!r}: {exc}") from exc
        else:
            sc.redlists[name] = Redlist(frozenset(sc.key(str(k)) for k in entry.get("keys", [])))

    for entry in node_entries:
        name = str(entry["name"])
        abides = bool(entry.get("abides", False))
        rl_name = entry.get("redlist")
        if rl_name is not None and rl_name not in sc.redlists:
            raise ScenarioError(f"node {name!r}: unknown redlist {rl_name!r}")
        if abides and rl_name is None:
            raise ScenarioError(f"node {name!r}: abiding node needs a redlist")
        try:
            policy = MinerPolicy(abides, sc.redlists.get(rl_name), float(entry.get("share", 0.0)))
            cfg = ForkChoiceConfig(int(entry.get("threshold", sc.threshold)), sc.work_metric)
        except ValueError as exc:
            raise ScenarioError(f"node {name!r}: {exc}") from exc
        sc.nodes.append(NodeSpec(name, policy, cfg, rl_name, bool(entry.get("miner", False))))
    names = [n.name for n in sc.nodes]
    if len(set(names)) != len(names):
        raise ScenarioError("node names must be unique")
    if sum(n.policy.hash_share for n in sc.nodes) > 1.0 + 1e-9:
        raise ScenarioError("hash shares sum to more than 1")

    last = None
    for entry in data.get("events") or []:
        step = int(_require(entry, "step", "event"))
        if last is not None and step <= last:
            raise ScenarioError(f"event steps must strictly increase (got {step} after {last})")
        last = step
        actions = entry.get("actions")
        if actions is None:
            actions = [{k: v for k, v in entry.items() if k != "step"}]
        for act in actions:
            kind = _require(act, "action", f"step {step}")
            if kind not in ACTIONS:
                raise ScenarioError(f"step {step}: unknown action {kind!r}")
            args = {k: v for k, v in act.items() if k != "action"}
            _check_refs(sc, step, kind, args, set(names))
            sc.events.append(ScenarioEvent(step, kind, args))
    return sc


def _check_refs(sc: Scenario, step: int, kind: str, args: dict, names: set[str]) -> None:
    where = f"step {step} {kind}"
    if kind == "send_tx":
        sc.key(str(_require(args, "from", where)))
        sc.key(str(_require(args, "to", where)))
        if str(_require(args, "via", where)) not in names:
            raise ScenarioError(f"{where}: unknown node {args['via']!r}")
    elif kind in ("mine", "assert_state"):
        if str(_require(args, "node", where)) not in names:
            raise ScenarioError(f"{where}: unknown node {args['node']!r}")
    elif kind == "inject_redlist_entry":
        if _require(args, "list", where) not in sc.redlists:
            raise ScenarioError(f"{where}: unknown redlist {args['list']!r}")
        sc.key(str(_require(args, "key", where)))
    elif kind == "mine_stochastic":
        int(_require(args, "rounds", where))


def load_scenario(path: str | os.PathLike) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {p}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{p}: {exc}") from exc
    return parse_scenario(data, p.parent)


class _Runner:
    def __init__(self, sc: Scenario, seed: Optional[int]):
        self.sc = sc
        self.seed = sc.seed if seed is None else seed
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        # runs must not leak redlist injections into each other
        self.redlists = {name: Redlist(r.entries, r.version_timestamp, r.source)
                         for name, r in sc.redlists.items()}
        nodes = []
        for spec in sc.nodes:
            policy = replace(spec.policy, redlist_ref=self.redlists.get(spec.redlist_source)
                             if spec.redlist_source else spec.policy.redlist_ref)
            nodes.append(Node(replace(spec, policy=policy), sc.keys[spec.name]))
        self.net = Network(nodes)
        self.report = SimReport(self.seed)
        self._tx_counter = 0

    def snapshot(self, step: int) -> None:
        self.report.snapshots.append((step, {n.name: NodeSnapshot.of(n) for n in self.net}))

    def build_prefix(self) -> None:
        ref = next(iter(self.net))
        for _ in range(self.sc.prefix_blocks):
            parent = ref.active_tip
            cb = Transaction.coinbase(PREFIX_KEY, 0, parent)
            self.net.broadcast(Block.create(parent, ref.index.height(parent) + 1, [cb]))

    def run(self) -> SimReport:
        if self.sc.nodes:
            self.build_prefix()
        self.snapshot(0)
        current = None
        for ev in self.sc.events:
            if current is not None and ev.step != current:
                self.snapshot(current)
            current = ev.step
            getattr(self, "_do_" + ev.action)(ev)
        if current is not None:
            self.snapshot(current)
        self.report.reference, self.report.miners = (
            miner_stats(self.net) if self.sc.nodes else ("", {}))
        self.report.fold_events = sum(n.folds for n in self.net)
        return self.report

    def _do_send_tx(self, ev: ScenarioEvent) -> None:
        a = ev.args
        self._tx_counter += 1
        label = str(a.get("label", f"tx{self._tx_counter}"))
        tx = Transaction.create([self.sc.key(str(a["from"]))], [self.sc.key(str(a["to"]))],
                                int(a.get("amount", 1)), nonce=f"{ev.step}:{self._tx_counter}:{label}",
                                label=label)
        self.net[str(a["via"])].submit(tx)

    def _do_mine(self, ev: ScenarioEvent) -> None:
        self.net.mine(str(ev.args["node"]))

    def _do_mine_stochastic(self, ev: ScenarioEvent) -> None:
        miners = [n for n in self.net if n.spec.miner]
        if not miners:
            raise ScenarioError(f"step {ev.step}: mine_stochastic with no miners")
        shares = np.array([n.policy.hash_share for n in miners], dtype=float)
        if shares.sum() <= 0:
            shares = np.ones(len(miners))
        cum = np.cumsum(shares / shares.sum())
        for _ in range(int(ev.args["rounds"])):
            u = self.rng.random()
            pick = min(int(np.searchsorted(cum, u, side="right")), len(miners) - 1)
            self.net.mine(miners[pick].name)

    def _do_inject_redlist_entry(self, ev: ScenarioEvent) -> None:
        self.redlists[ev.args["list"]].add(self.sc.key(str(ev.args["key"])))

    def _do_assert_state(self, ev: ScenarioEvent) -> None:
        name = str(ev.args["node"])
        snap = NodeSnapshot.of(self.net[name])
        checks = {
            "active": (str(ev.args["active"]) if "active" in ev.args else None, snap.active),
            "branches": (tuple(sorted(ev.args["branches"])) if "branches" in ev.args else None,
                         snap.branches),
            "mempool": (tuple(ev.args["mempool"] or ()) if "mempool" in ev.args else None,
                        snap.mempool),
            "folds": (int(ev.args["folds"]) if "folds" in ev.args else None, snap.folds),
        }
        for fld, (expected, actual) in checks.items():
            if expected is not None and expected != actual:
                self.report.failures.append(AssertionFailure(ev.step, name, fld, expected, actual))


def run_scenario(spec: Scenario | str | os.PathLike, seed: Optional[int] = None) -> SimReport:
    """Run a scenario; assertion mismatches are collected in ``report.failures``."""
    sc = spec if isinstance(spec, Scenario) else load_scenario(spec)
    return _Runner(sc, seed).run()
