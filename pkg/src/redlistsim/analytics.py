"""Gambler's-ruin model of the race between a clean and a tainted branch.

The lead of the redlist-abiding pool R over the indifferent pool I starts at
0 and moves +1 with probability p (R finds the block) or -1 with probability
q = 1 - p. R wins when the lead reaches +1 (I switches at threshold 1) and
folds when it reaches -T.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

CSV_HEADER = ("p", "T", "p_r_wins", "p_i_folds", "mc_r_wins", "mc_stderr", "mc_i_folds", "races", "seed")

FOLD_LOSS_NOTE = (
    "note: the walk model puts I's fold probability at about 0.148 for R at 35.2% of the hash "
    "rate; this is consistent with the '>15%' reward-loss figure up to its unstated payoff "
    "accounting, and is reported as computed rather than forced to 15%."
)
MAJORITY_NOTE = (
    "note: with a finite fold threshold T the walk model gives P[R wins] = T/(T+1) at p = 0.5 "
    "(0.75 for T = 3), not certainty; 'always wins at 50%' needs an unbounded hold."
)


@dataclass(frozen=True)
class RaceParams:
    p: float
    T: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.p <= 1.0) or math.isnan(self.p):
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"threshold T must be a positive integer, got {self.T}")

    @property
    def q(self) -> float:
        return 1.0 - self.p


def _ruin(p: float, start: int, top: int) -> float:
    """P[walk from ``start`` hits ``top`` before 0], +1 w.p. ``p``.

    Equals (1 - r**start) / (1 - r**top) with r = q/p, evaluated as a ratio
    of geometric sums so p = 1/2 and p near 1/2 need no special casing.
    """
    if start <= 0:
        return 0.0
    if start >= top:
        return 1.0
    q = 1.0 - p
    if p == 0.0:
        return 0.0
    if q == 0.0:
        return 1.0
    if q <= p:
        r = q / p
        return _geom(r, start) / _geom(r, top)
    # rewrite with s = p/q < 1 to keep every power bounded
    s = p / q
    return s ** (top - start) * _geom(s, start) / _geom(s, top)


def _geom(x: float, n: int) -> float:
    """1 + x + ... + x**(n-1) for 0 <= x <= 1, accurate near x = 1."""
    if x == 1.0:
        return float(n)
    if x < 0.5:
        # far from 1 the direct form is exact enough; log1p(x - 1) underflows to -inf
        return (1.0 - x**n) / (1.0 - x)
    d = x - 1.0
    return math.expm1(n * math.log1p(d)) / d


def p_r_wins(params: RaceParams) -> float:
    """Probability R never has to fold its clean branch."""
    return _ruin(params.p, params.T, params.T + 1)


def p_i_folds(params: RaceParams) -> float:
    """Probability I finds the first block but R still wins the race."""
    return params.q * _ruin(params.p, params.T - 1, params.T + 1)


def absorption_probabilities(params: RaceParams) -> dict[int, float]:
    """Oracle: P[absorb at +1] from every lead in -T..+1 by a direct linear solve.

    Independent of the closed form; builds the transient block of the
    transition matrix and solves (I - Q) x = b.
    """
    T, p, q = params.T, params.p, params.q
    transient = list(range(-T + 1, 1))  # -T+1 .. 0
    pos = {s: i for i, s in enumerate(transient)}
    n = len(transient)
    A = np.eye(n)
    b = np.zeros(n)
    for s in transient:
        i = pos[s]
        up, down = s + 1, s - 1
        if up == 1:
            b[i] += p
        else:
            A[i, pos[up]] -= p
        if down != -T:
            A[i, pos[down]] -= q
    x = np.linalg.solve(A, b)
    out = {s: float(x[pos[s]]) for s in transient}
    out[1] = 1.0
    out[-T] = 0.0
    return out


def oracle_p_r_wins(params: RaceParams) -> float:
    return absorption_probabilities(params)[0]


def oracle_p_i_folds(params: RaceParams) -> float:
    return params.q * absorption_probabilities(params)[-1]


def find_crossover(T: int, target: float = 0.5, tol: float = 1e-9) -> float:
    """Smallest p with ``p_r_wins(p, T) >= target`` by bisection."""
    if T < 1:
        raise ValueError("T must be >= 1")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p_r_wins(RaceParams(mid, T)) >= target:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class SweepRow:
    p: float
    T: int
    p_r_wins: float
    p_i_folds: float
    mc_r_wins: Optional[float] = None
    mc_stderr: Optional[float] = None
    mc_i_folds: Optional[float] = None
    races: int = 0
    seed: Optional[int] = None

    def as_csv(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(round(v, 12))
            return str(v)

        return [fmt(getattr(self, f.name)) for f in fields(self)]


def grid(start: float, end: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    if n < 1:
        raise ValueError("empty grid")
    return [round(start + i * step, 12) for i in range(n)]


def sweep(T: int, p_grid: Sequence[float], races: int = 0, seed: int = 0,
          workers: Optional[int] = None) -> list[SweepRow]:
    """Closed-form values over ``p_grid``, with Monte Carlo columns when ``races > 0``.

    Grid point ``i`` is simulated with seed ``seed + i`` so rows can be
    reproduced one at a time.
    """
    from .simnet.race import run_race

    rows = []
    for i, p in enumerate(p_grid):
        params = RaceParams(float(p), T)
        row = SweepRow(params.p, T, p_r_wins(params), p_i_folds(params))
        if races > 0:
            stats = run_race(params, seed + i, races, workers=workers)
            row = SweepRow(row.p, T, row.p_r_wins, row.p_i_folds, stats.r_win_fraction,
                           stats.r_win_stderr, stats.i_fold_fraction, races, seed + i)
        rows.append(row)
    return rows


def write_csv(rows: Iterable[SweepRow], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.as_csv())


def read_csv(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
