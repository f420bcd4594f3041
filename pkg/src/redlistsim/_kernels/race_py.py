"""Pure-Python block-race kernel (fallback when the extension is not built)."""

from __future__ import annotations

import numpy as np

_BATCH = 1 << 16


def race_counts(bit_generator: np.random.BitGenerator, p: float, threshold: int,
                races: int) -> tuple[int, int]:
    gen = np.random.Generator(bit_generator)
    r_wins = i_folds = 0
    steps: list[bool] = []
    pos = 0
    for _ in range(races):
        lead = 0
        first = 0
        while True:
            if pos == len(steps):
                steps = (gen.random(_BATCH) < p).tolist()
                pos = 0
            lead += 1 if steps[pos] else -1
            pos += 1
            if first == 0:
                first = lead
            if lead == 1:
                r_wins += 1
                if first == -1:
                    i_folds += 1
                break
            if lead == -threshold:
                break
    return r_wins, i_folds
