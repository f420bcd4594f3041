"""Monte Carlo block races.

Random stream: numpy ``PCG64`` seeded from ``SeedSequence(seed)``. Races are
split into fixed chunks of ``CHUNK`` races; chunk ``k`` draws from the
``k``-th child of ``SeedSequence(seed).spawn``. Each walk step consumes one
53-bit uniform ``u`` and R extends iff ``u < p``. Results therefore depend
only on ``(p, T, seed, races)``, not on the kernel or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import _kernels
from ..analytics import RaceParams

CHUNK = 1 << 16


@dataclass(frozen=True)
class RaceStats:
    races: int
    r_wins: int
    i_folds: int

    @property
    def r_win_fraction(self) -> float:
        return self.r_wins / self.races

    @property
    def i_fold_fraction(self) -> float:
        return self.i_folds / self.races

    @property
    def r_win_stderr(self) -> float:
        f = self.r_win_fraction
        return math.sqrt(f * (1.0 - f) / self.races)

    @property
    def i_fold_stderr(self) -> float:
        f = self.i_fold_fraction
        return math.sqrt(f * (1.0 - f) / self.races)


def _chunk(args: tuple) -> tuple[int, int]:
    child, p, T, n, pure = args
    kernel = _kernels.race_py.race_counts if pure else _kernels.race_counts
    return kernel(np.random.PCG64(child), p, T, n)


def run_race(params: RaceParams, seed: int, races: int, workers: Optional[int] = None,
             pure_python: bool = False) -> RaceStats:
    if races < 1:
        raise ValueError("races must be >= 1")
    n_chunks = -(-races // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [races - CHUNK * (n_chunks - 1)]
    jobs = [(c, params.p, params.T, n, pure_python) for c, n in zip(children, sizes)]
    if workers and workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk, jobs))
    else:
        results = [_chunk(job) for job in jobs]
    return RaceStats(races, sum(r for r, _ in results), sum(f for _, f in results))
