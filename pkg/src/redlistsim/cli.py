"""Command-line entry point.

Exit codes: 0 success, 1 assertion failure, 2 usage or configuration error.
All randomness derives from ``--seed`` (default ``DEFAULT_SEED``) through
numpy's PCG64.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from . import analytics
from .analytics import RaceParams
from .redlist import RedlistError

DEFAULT_SEED = 2014
EXIT_OK, EXIT_ASSERT, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("redlistsim")


def bundled(name: str) -> Path:
    return Path(str(resources.files("redlistsim") / "data" / name))


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text)


def cmd_scenario(args: argparse.Namespace) -> int:
    from .simnet.scenario import ScenarioError, run_scenario

    spec = args.spec or str(bundled("two_miner_fold.yaml"))
    try:
        report = run_scenario(spec, seed=args.seed)
    except (ScenarioError, RedlistError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.to_text()
    sys.stdout.write(text)
    _write(args.out, text)
    _write(args.csv_out, report.to_csv())
    if not report.ok:
        for failure in report.failures:
            print(failure, file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_golden(args: argparse.Namespace) -> int:
    args.spec = str(bundled("two_miner_fold.yaml"))
    args.seed = None
    return cmd_scenario(args)


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        p_grid = analytics.grid(args.grid_start, args.grid_end, args.grid_step)
        if p_grid[0] < 0 or p_grid[-1] > 1 + 1e-12:
            raise ValueError("grid must lie within [0, 1]")
        rows = analytics.sweep(args.threshold, p_grid, args.races, args.seed, args.workers)
    except ValueError as exc:
        print(f"sweep error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.csv_out:
        try:
            analytics.write_csv(rows, args.csv_out)
        except OSError as exc:
            print(f"cannot write {args.csv_out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    T = args.threshold
    p_star = analytics.find_crossover(T)
    at_star = RaceParams(p_star, T)
    print(f"threshold T = {T}, grid points = {len(rows)}")
    print(f"crossover p* = {p_star:.6f} (P[R wins] = {analytics.p_r_wins(at_star):.6f})")
    print(f"P[I folds] at p* = {analytics.p_i_folds(at_star):.6f}")
    print(f"P[R wins] at p = 0.5: {analytics.p_r_wins(RaceParams(0.5, T)):.6f}")
    print(analytics.FOLD_LOSS_NOTE)
    print(analytics.MAJORITY_NOTE)
    return EXIT_OK


def cmd_race(args: argparse.Namespace) -> int:
    from .simnet.race import run_race

    try:
        params = RaceParams(args.p, args.threshold)
        stats = run_race(params, args.seed, args.races, workers=args.workers)
    except ValueError as exc:
        print(f"race error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"p = {params.p}, T = {params.T}, races = {stats.races}, seed = {args.seed}")
    print(f"P[R wins]  closed form {analytics.p_r_wins(params):.6f}  "
          f"monte carlo {stats.r_win_fraction:.6f} +/- {stats.r_win_stderr:.6f}")
    print(f"P[I folds] closed form {analytics.p_i_folds(params):.6f}  "
          f"monte carlo {stats.i_fold_fraction:.6f} +/- {stats.i_fold_stderr:.6f}")
    return EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    from .simnet.attack import AttackConfigError, load_attack, run_attack

    spec = args.spec or str(bundled("split_redlist_attack.yaml"))
    try:
        cfg = load_attack(spec)
    except AttackConfigError as exc:
        print(f"attack config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = run_attack(cfg, seed=args.seed)
    text = report.to_text()
    sys.stdout.write(text)
    _write(args.out, text)
    return EXIT_OK


def cmd_serve_redlist(args: argparse.Namespace) -> int:
    from .server import serve_forever

    try:
        serve_forever(args.redlist_file, args.bind)
    except (OSError, ValueError) as exc:
        print(f"serve-redlist: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redlistsim", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="run a scripted scenario and check its assertions")
    p.add_argument("--spec", help="scenario YAML (default: bundled two-miner fold)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario's seed")
    p.add_argument("--out", help="write the text report here")
    p.add_argument("--csv-out", help="write per-step CSV here")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("golden", help="verify the bundled two-miner fold trace")
    p.add_argument("--out")
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_golden)

    p = sub.add_parser("sweep", help="P[R wins] / P[I folds] over a grid of p")
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--grid-start", type=float, default=0.0)
    p.add_argument("--grid-end", type=float, default=1.0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--races", type=int, default=0, help="Monte Carlo races per grid point")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("race", help="Monte Carlo block race against the closed form")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--races", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_race)

    p = sub.add_parser("attack", help="split-redlist attack simulation")
    p.add_argument("--spec", help="attack YAML (default: bundled continuous injection)")
    p.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("serve-redlist", help="serve a redlist file over HTTP")
    p.add_argument("--redlist-file", required=True)
    p.add_argument("--bind", default="127.0.0.1:8333")
    p.set_defaults(func=cmd_serve_redlist)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
