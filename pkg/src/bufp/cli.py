"""Command-line entry point: ``bufp train | match | report``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    ExperimentError,
    cmd_match,
    cmd_report,
    cmd_train,
    parse_config_file,
    parse_seeds,
)
from .metrics import fmt


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bufp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="run a solver over one or more seeds")
    tr.add_argument("--config", help="key = value file; flags override it")
    tr.add_argument("--game")
    tr.add_argument("--algo", help="cfr, bufp-ef or bufp-x")
    tr.add_argument("--iters", type=int)
    tr.add_argument("--eval-every", type=int)
    tr.add_argument("--seeds", help="comma list or range, e.g. 0-4")
    tr.add_argument("--tie-break", choices=("deterministic", "random"))
    tr.add_argument("--out")
    tr.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")

    ma = sub.add_parser("match", help="cross-table of exact head-to-head values")
    ma.add_argument("--config", help="key = value file; flags override it")
    ma.add_argument("--game")
    ma.add_argument("dumps", nargs="+", help="strategy dumps written by train")
    ma.add_argument("--names", help="comma-separated agent ids, one per dump")
    ma.add_argument("--force-action", help="player-1 root action, e.g. call")
    ma.add_argument("--out", help="cross-table CSV path")

    rp = sub.add_parser("report", help="band series and summary from training runs")
    rp.add_argument("runs", nargs="+", help="training output directories")
    rp.add_argument("--out", required=True)
    rp.add_argument("--unforced", help="unforced cross-table CSV")
    rp.add_argument("--forced", help="forced cross-table CSV")
    rp.add_argument("--baseline", default="cfr")
    return parser


def _train_config(args: argparse.Namespace) -> ExperimentConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in ("game", "algo", "iters", "eval-every", "seeds", "tie-break", "out"):
        flag = getattr(args, key.replace("-", "_"))
        if flag is not None:
            values[key] = flag
    cfg = ExperimentConfig(jobs=args.jobs)
    try:
        if "game" in values:
            cfg.game = str(values["game"])
        if "algo" in values:
            cfg.algo = str(values["algo"])
        if "iters" in values:
            cfg.iters = int(values["iters"])
        if "eval-every" in values:
            cfg.eval_every = int(values["eval-every"])
        if "seeds" in values:
            cfg.seeds = parse_seeds(values["seeds"])
        if "tie-break" in values:
            cfg.tie_break = str(values["tie-break"])
        if "out" in values:
            cfg.out = str(values["out"])
    except ValueError as exc:
        raise ExperimentError(f"bad config value: {exc}") from exc
    return cfg


def _match_options(args: argparse.Namespace) -> tuple[str, str | None, str]:
    values = parse_config_file(args.config) if args.config else {}
    game = args.game or values.get("game")
    force = args.force_action or values.get("force-action") or None
    out = args.out or values.get("out")
    if not game:
        raise ExperimentError("--game is required")
    if not out:
        raise ExperimentError("--out is required")
    return game, force, out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            out = cmd_train(_train_config(args))
            print(f"wrote {out}")
        elif args.command == "match":
            game, force, out = _match_options(args)
            names = args.names.split(",") if args.names else None
            res = cmd_match(game, args.dumps, force, names)
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(res.table.to_csv())
            for name, e in res.exploitability_mbh.items():
                print(f"{name}: exploitability {fmt(e)} mb/h")
            print(f"wrote {path}")
        else:
            text = cmd_report(args.runs, args.out, args.unforced, args.forced, args.baseline)
            sys.stdout.write(text)
    except (ExperimentError, OSError) as exc:
        print(f"bufp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
