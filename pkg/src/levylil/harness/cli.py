"""Command line entry point: ``levylil run | report | replay``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ..errors import LevyLilError
from ..process_sim import read_path_dump, running_sup
from .config import THREADS_ENV, default_threads, load_config
from .records import report, run_experiment


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg = cfg.replace(master_seed=args.seed, n_paths=args.paths, output_dir=args.out,
                      threads=args.threads if args.threads is not None else default_threads())
    record = run_experiment(cfg)
    print(json.dumps(record.to_dict(), indent=2, sort_keys=True))
    return 0 if record.passed else 1


def _cmd_report(args) -> int:
    text = report(args.dir, args.output)
    print(text, end="")
    return 0


def _cmd_replay(args) -> int:
    grid, seed, positions = read_path_dump(args.dump)
    sup = running_sup(positions)
    summary = {"n_steps": grid.n_steps, "dt": grid.dt, "seed": seed,
               "terminal": float(positions[-1]), "sup": float(sup[-1])}
    if args.config:
        from ..process_sim import simulate_path
        cfg = load_config(args.config)
        again = simulate_path(cfg.process, grid, seed).positions
        summary["bit_identical"] = bool(np.array_equal(again, positions))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary.get("bit_identical", True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levylil",
                                     description="Stable-process LIL experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--paths", type=int, default=None, help="override n_paths")
    run.add_argument("--threads", type=int, default=None,
                     help=f"worker threads (default: ${THREADS_ENV} or 1)")
    run.add_argument("--out", default=None, help="override output_dir")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="summarize results.json records under a directory")
    rep.add_argument("dir", help="directory or glob pattern")
    rep.add_argument("-o", "--output", default=None, help="also write the report here")
    rep.set_defaults(func=_cmd_report)

    rp = sub.add_parser("replay", help="inspect a binary path dump")
    rp.add_argument("dump")
    rp.add_argument("--config", default=None,
                    help="config whose process regenerates the dump; checks bit identity")
    rp.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LevyLilError as exc:
        print(f"levylil: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
