import csv
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from redlistsim import analytics
from redlistsim.analytics import (
    CSV_HEADER,
    RaceParams,
    find_crossover,
    oracle_p_i_folds,
    oracle_p_r_wins,
    p_i_folds,
    p_r_wins,
)

P_GRID = [i / 10 for i in range(1, 10)]

# bisection on the linear-solve oracle alone, to 1e-12
T5_CROSSOVER_ORACLE = 0.33716030092728033


@pytest.mark.parametrize("T", range(1, 7))
def test_closed_form_matches_markov_oracle(T):
    for p in P_GRID:
        params = RaceParams(p, T)
        assert abs(p_r_wins(params) - oracle_p_r_wins(params)) <= 1e-12
        assert abs(p_i_folds(params) - oracle_p_i_folds(params)) <= 1e-12


def test_textbook_formula_away_from_half():
    for T in (1, 3, 6):
        for p in (0.1, 0.3, 0.7, 0.9):
            r = (1 - p) / p
            assert p_r_wins(RaceParams(p, T)) == pytest.approx((1 - r**T) / (1 - r**(T + 1)), abs=1e-12)


def test_examples():
    assert p_r_wins(RaceParams(1.0, 3)) == 1.0
    assert p_r_wins(RaceParams(0.0, 3)) == 0.0
    assert p_r_wins(RaceParams(0.5, 3)) == pytest.approx(0.75, abs=1e-15)
    assert p_i_folds(RaceParams(1.0, 3)) == 0.0
    assert p_i_folds(RaceParams(0.5, 3)) == pytest.approx(0.25, abs=1e-15)
    assert p_r_wins(RaceParams(0.3, 3)) == pytest.approx(oracle_p_r_wins(RaceParams(0.3, 3)), abs=1e-12)


def test_half_is_continuous():
    for T in (1, 3, 6):
        mid = p_r_wins(RaceParams(0.5, T))
        assert mid == pytest.approx(T / (T + 1))
        for eps in (1e-9, 1e-12):
            assert abs(p_r_wins(RaceParams(0.5 + eps, T)) - mid) < 1e-6
            assert abs(p_r_wins(RaceParams(0.5 - eps, T)) - mid) < 1e-6


def test_crossovers():
    assert abs(find_crossover(3) - 0.352) <= 0.005
    assert find_crossover(1) == pytest.approx(0.5, abs=1e-9)
    assert find_crossover(5) == pytest.approx(T5_CROSSOVER_ORACLE, abs=1e-8)
    p3 = find_crossover(3)
    assert p_r_wins(RaceParams(p3, 3)) >= 0.5 > p_r_wins(RaceParams(p3 - 1e-8, 3))
    with pytest.raises(ValueError):
        find_crossover(0)


def test_fold_loss_near_crossover():
    assert abs(p_i_folds(RaceParams(0.352, 3)) - 0.148) <= 0.002


@pytest.mark.parametrize("bad", [(-0.1, 3), (1.1, 3), (float("nan"), 3), (0.5, 0), (0.5, 1.5)])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        RaceParams(*bad)


def test_monotone_in_p_and_T():
    grid = [i / 100 for i in range(101)]
    for T in range(1, 7):
        vals = [p_r_wins(RaceParams(p, T)) for p in grid]
        assert all(a <= b for a, b in zip(vals, vals[1:]))
    for p in grid:
        vals = [p_r_wins(RaceParams(p, T)) for T in range(1, 10)]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_limits():
    eps = 1e-6
    for T in (1, 3, 6):
        assert p_r_wins(RaceParams(1 - eps, T)) > 1 - 1e-5
        assert p_r_wins(RaceParams(eps, T)) < 1e-5


@given(st.floats(0, 1), st.integers(1, 50))
def test_fold_bounded_by_q(p, T):
    params = RaceParams(p, T)
    assert 0.0 <= p_i_folds(params) <= params.q + 1e-15
    assert 0.0 <= p_r_wins(params) <= 1.0


def test_sweep_csv(tmp_path):
    p_grid = analytics.grid(0.05, 0.95, 0.05)
    assert len(p_grid) == 19
    rows = analytics.sweep(3, p_grid)
    vals = [r.p_r_wins for r in rows]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    row = next(r for r in rows if r.p == 0.35)
    assert abs(row.p_r_wins - 0.5) <= 0.01
    out = tmp_path / "sweep.csv"
    analytics.write_csv(rows, out)
    with open(out) as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == CSV_HEADER
    back = analytics.read_csv(out)
    assert len(back) == 19 and back[0]["mc_r_wins"] == ""
    assert float(back[6]["p_r_wins"]) == pytest.approx(rows[6].p_r_wins, abs=1e-12)


def test_sweep_monte_carlo_within_four_stderr():
    rows = analytics.sweep(3, P_GRID, races=100_000, seed=7)
    for row in rows:
        err = math.sqrt(row.p_r_wins * (1 - row.p_r_wins) / row.races)
        assert abs(row.mc_r_wins - row.p_r_wins) < 4 * err, row.p
        fold_err = math.sqrt(row.p_i_folds * (1 - row.p_i_folds) / row.races)
        assert abs(row.mc_i_folds - row.p_i_folds) < 4 * fold_err, row.p
    assert [r.seed for r in rows] == list(range(7, 16))


def test_grid_errors():
    with pytest.raises(ValueError):
        analytics.grid(0, 1, 0)
    with pytest.raises(ValueError):
        analytics.grid(1, 0, 0.1)
    assert analytics.grid(0, 1, 0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]
