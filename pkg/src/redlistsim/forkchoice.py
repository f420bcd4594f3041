"""Tip selection with taint markers.

A redlist-abiding node refuses to move onto a tainted branch until that
branch leads its clean tip by more than ``switching_threshold`` blocks. Once
it gives in, the adopted tip becomes the node's reset point and taint at or
below it is forgiven.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .chain import BlockIndex, Transaction, UnknownBlockError
from .redlist import Redlist, TaintVerdict, check_block


class WorkMetric(enum.Enum):
    BLOCK_COUNT = "block-count"
    CUMULATIVE_WORK = "cumulative-work"


@dataclass(frozen=True)
class ForkChoiceConfig:
    switching_threshold: int = 2
    work_metric: WorkMetric = WorkMetric.BLOCK_COUNT

    def __post_init__(self) -> None:
        if self.switching_threshold < 1:
            raise ValueError("switching_threshold must be >= 1")
        if not isinstance(self.work_metric, WorkMetric):
            object.__setattr__(self, "work_metric", WorkMetric(self.work_metric))


@dataclass(frozen=True)
class BranchState:
    tip: bytes
    height: int
    cum_work: int
    tainted: bool

    def metric(self, cfg: ForkChoiceConfig) -> int:
        if cfg.work_metric is WorkMetric.BLOCK_COUNT:
            return self.height
        return self.cum_work


class Preference(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    TIE = "keep-incumbent-on-tie"


VerdictCache = dict[bytes, TaintVerdict]


def classify_branch(
    index: BlockIndex,
    tip: bytes,
    redlist: Redlist,
    reset_point: Optional[bytes] = None,
    cache: Optional[VerdictCache] = None,
) -> BranchState:
    """Taint marker for the blocks strictly after ``reset_point`` up to ``tip``.

    Verdicts already in ``cache`` are reused rather than recomputed, which is
    how a node keeps the verdict a block had when it was first connected.
    """
    if tip not in index:
        raise UnknownBlockError(tip.hex())
    reset_point = index.genesis.id if reset_point is None else reset_point
    if not index.is_ancestor(reset_point, tip):
        raise ValueError("reset point is not an ancestor of the tip")
    tainted = False
    for blk in index.walk_back(tip, stop=reset_point):
        if cache is None:
            verdict = check_block(redlist, blk)
        else:
            verdict = cache.get(blk.id)
            if verdict is None:
                verdict = cache[blk.id] = check_block(redlist, blk)
        if verdict.tainted:
            tainted = True
            break
    return BranchState(tip, index.height(tip), index.work_of(tip), tainted)


def _compare(a: int, b: int) -> Preference:
    if a > b:
        return Preference.LEFT
    if a < b:
        return Preference.RIGHT
    return Preference.TIE


def prefer(l: BranchState, r: BranchState, cfg: ForkChoiceConfig) -> Preference:
    """Compare challenger ``l`` against incumbent ``r``."""
    ml, mr = l.metric(cfg), r.metric(cfg)
    if l.tainted == r.tainted:
        return _compare(ml, mr)
    if not l.tainted:
        # clean challenger escapes a tainted incumbent on a tie
        return Preference.LEFT if ml >= mr else Preference.RIGHT
    lead = l.height - r.height
    if lead > cfg.switching_threshold and ml > mr:
        return Preference.LEFT
    return Preference.RIGHT


def plain_prefer(l: BranchState, r: BranchState, cfg: ForkChoiceConfig) -> Preference:
    """Unmodified most-work comparator, ignoring taint."""
    return _compare(l.metric(cfg), r.metric(cfg))


@dataclass
class ForkChoiceState:
    """Per-node fork-choice bookkeeping."""

    active_tip: bytes
    reset_point: bytes
    verdicts: VerdictCache = field(default_factory=dict)

    @classmethod
    def fresh(cls, index: BlockIndex) -> "ForkChoiceState":
        return cls(index.active_tip, index.genesis.id)

    def effective_reset(self, index: BlockIndex, tip: bytes) -> bytes:
        # branches that split off below the reset point are judged from the split
        return index.common_ancestor(tip, self.reset_point)


@dataclass(frozen=True)
class TipDecision:
    switch: bool
    new_tip: Optional[bytes] = None
    returned_txs: tuple[Transaction, ...] = ()
    challenger: Optional[BranchState] = None
    incumbent: Optional[BranchState] = None

    @property
    def folded(self) -> bool:
        """Switched from a clean tip onto a tainted branch."""
        return bool(self.switch and self.challenger and self.incumbent
                    and self.challenger.tainted and not self.incumbent.tainted)


HOLD = TipDecision(False)


def abandoned_txs(index: BlockIndex, old_tip: bytes, new_tip: bytes) -> tuple[Transaction, ...]:
    """Non-coinbase transactions on the dropped segment that the new branch lacks."""
    fork = index.common_ancestor(old_tip, new_tip)
    kept = {tx.id for blk in index.walk_back(new_tip, stop=fork) for tx in blk.txs}
    out = []
    for blk in index.segment(fork, old_tip):
        out.extend(tx for tx in blk.txs if not tx.is_coinbase and tx.id not in kept)
    return tuple(out)


def on_new_tip(
    state: ForkChoiceState,
    index: BlockIndex,
    candidate_tip: bytes,
    redlist: Redlist,
    cfg: ForkChoiceConfig,
) -> TipDecision:
    """Decide whether ``candidate_tip`` displaces the active tip, and apply it."""
    if candidate_tip not in index:
        raise UnknownBlockError(candidate_tip.hex())
    if candidate_tip == state.active_tip:
        return HOLD
    incumbent = classify_branch(index, state.active_tip, redlist,
                                state.effective_reset(index, state.active_tip), state.verdicts)
    challenger = classify_branch(index, candidate_tip, redlist,
                                 state.effective_reset(index, candidate_tip), state.verdicts)
    if prefer(challenger, incumbent, cfg) is not Preference.LEFT:
        return TipDecision(False, challenger=challenger, incumbent=incumbent)
    returned = abandoned_txs(index, state.active_tip, candidate_tip)
    state.active_tip = candidate_tip
    state.reset_point = candidate_tip
    index.active_tip = candidate_tip
    return TipDecision(True, candidate_tip, returned, challenger, incumbent)
