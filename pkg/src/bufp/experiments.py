"""Training sweeps, matchup tables and report generation behind the CLI.

Layout of a training directory::

    <out>/run.json                 config of the sweep
    <out>/seed_<k>/convergence.csv iter, exploitability_mbh, total_exploitability_mbh
    <out>/seed_<k>/timing.csv      iter, wall_ms
    <out>/seed_<k>/strategy.json   final strategy + belief dump
    <out>/aggregate.csv            per-iteration mean and 5th/95th percentiles
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .game import load_game
from .metrics import CrossTable, cross_table, exploitability, fmt, read_cross_table
from .solvers import TIE_BREAK_MODES, canonical_algorithm, run
from .strategy import read_dump, write_dump

CONVERGENCE_COLUMNS = ("iter", "exploitability_mbh", "total_exploitability_mbh")
AGGREGATE_COLUMNS = (
    "iter",
    "exploitability_mean",
    "exploitability_lo",
    "exploitability_hi",
    "total_exploitability_mean",
    "total_exploitability_lo",
    "total_exploitability_hi",
)
CONFIG_KEYS = ("game", "algo", "iters", "eval-every", "seeds", "tie-break", "out", "force-action")


class ExperimentError(Exception):
    """Invalid configuration or unusable input/output files."""


@dataclass
class ExperimentConfig:
    game: str = "kuhn"
    algo: str = "cfr"
    iters: int = 1000
    eval_every: int = 100
    seeds: list[int] = field(default_factory=lambda: [0])
    tie_break: str = "deterministic"
    out: str = "runs"
    force_action: str | None = None
    jobs: int = 1

    def validate(self) -> None:
        try:
            load_game(self.game)
            self.algo = canonical_algorithm(self.algo)
        except ValueError as exc:
            raise ExperimentError(str(exc)) from exc
        if self.iters < 1:
            raise ExperimentError("iters must be >= 1")
        if self.eval_every < 1 or self.iters % self.eval_every:
            raise ExperimentError("eval-every must divide iters")
        if not self.seeds:
            raise ExperimentError("at least one seed is required")
        if self.tie_break not in TIE_BREAK_MODES:
            raise ExperimentError(f"unknown tie-break mode {self.tie_break!r}")


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ExperimentError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in CONFIG_KEYS:
            raise ExperimentError(f"{path}:{n}: expected one of {', '.join(CONFIG_KEYS)}")
        out[key] = value.strip()
    return out


def parse_seeds(text: str) -> list[int]:
    """``"0,1,2"`` or a range ``"0-4"``."""
    seeds: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def write_rows(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, (int, np.integer)) else fmt(x) for x in r])
    path.write_text(buf.getvalue())


def read_rows(path: str | Path) -> tuple[list[str], np.ndarray]:
    try:
        rows = list(csv.reader(Path(path).read_text().splitlines()))
    except OSError as exc:
        raise ExperimentError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ExperimentError(f"empty file {path}")
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(
        -1, len(rows[0])
    )


def _train_seed(cfg: ExperimentConfig, seed: int) -> tuple[int, np.ndarray]:
    tree = load_game(cfg.game)
    res = run(tree, cfg.algo, cfg.iters, cfg.eval_every, seed=seed, tie_break=cfg.tie_break)
    d = Path(cfg.out) / f"seed_{seed}"
    d.mkdir(parents=True, exist_ok=True)
    log = res.log
    write_rows(
        d / "convergence.csv",
        CONVERGENCE_COLUMNS,
        [(r.iteration, r.exploitability_mbh, r.total_exploitability_mbh) for r in log.rows],
    )
    write_rows(d / "timing.csv", ("iter", "wall_ms"), [(r.iteration, r.wall_ms) for r in log.rows])
    write_dump(
        d / "strategy.json",
        tree,
        res.profile,
        res.state.t,
        res.beliefs,
        algorithm=cfg.algo,
        seed=seed,
        tie_break=cfg.tie_break,
    )
    table = np.array(
        [[r.iteration, r.exploitability_mbh, r.total_exploitability_mbh] for r in log.rows]
    )
    return seed, table


def aggregate(tables: list[np.ndarray]) -> np.ndarray:
    """Mean and 5th/95th percentile of both metrics across seeds, per row.

    The band is widened to contain the mean, which a skewed sample can
    otherwise push outside the percentiles.
    """
    stack = np.stack(tables)  # seeds x rows x 3
    iters = stack[0, :, 0]
    cols = [iters]
    for j in (1, 2):
        vals = stack[:, :, j]
        mean = vals.mean(axis=0)
        lo, hi = np.percentile(vals, [5, 95], axis=0)
        cols += [mean, np.minimum(lo, mean), np.maximum(hi, mean)]
    return np.column_stack(cols)


def cmd_train(cfg: ExperimentConfig) -> Path:
    cfg.validate()
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ExperimentError(f"output directory {out} is not writable: {exc}") from exc
    seeds = list(dict.fromkeys(cfg.seeds))
    if cfg.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(min(cfg.jobs, len(seeds))) as ex:
            results = list(ex.map(_train_seed, [cfg] * len(seeds), seeds))
    else:
        results = [_train_seed(cfg, s) for s in seeds]
    results.sort()
    agg = aggregate([t for _, t in results])
    write_rows(
        out / "aggregate.csv",
        AGGREGATE_COLUMNS,
        [(int(r[0]), *r[1:]) for r in agg],
    )
    meta = asdict(cfg)
    meta.pop("jobs")
    meta["seeds"] = seeds
    (out / "run.json").write_text(json.dumps(meta, indent=1) + "\n")
    return out


@dataclass(frozen=True)
class MatchOutput:
    table: CrossTable
    exploitability_mbh: dict[str, float]


def _agent_name(doc: dict, path: Path, taken: set[str]) -> str:
    base = doc.get("algorithm") or path.stem
    if "seed" in doc and doc.get("algorithm"):
        base = f"{base}#{doc['seed']}" if any(n.split("#")[0] == base for n in taken) else base
    name, k = base, 2
    while name in taken:
        name = f"{base}_{k}"
        k += 1
    return name


def cmd_match(
    game: str,
    dumps: list[str | Path],
    force_action: str | None = None,
    names: list[str] | None = None,
) -> MatchOutput:
    try:
        tree = load_game(game)
    except ValueError as exc:
        raise ExperimentError(str(exc)) from exc
    if len(dumps) < 2:
        raise ExperimentError("match needs at least two strategy dumps")
    if names is not None and len(names) != len(dumps):
        raise ExperimentError("number of names must match number of dumps")
    agents = []
    taken: set[str] = set()
    for i, p in enumerate(dumps):
        try:
            profile, doc = read_dump(p, tree)
        except ValueError as exc:
            raise ExperimentError(str(exc)) from exc
        name = names[i] if names else _agent_name(doc, Path(p), taken)
        taken.add(name)
        agents.append((name, profile))
    try:
        table = cross_table(tree, agents, force_action)
    except ValueError as exc:
        raise ExperimentError(str(exc)) from exc
    expl = {name: exploitability(tree, prof) for name, prof in agents}
    return MatchOutput(table, expl)


@dataclass(frozen=True)
class Recovery:
    agent: str
    p1_delta: float
    p2_delta: float
    p1_recovery_pct: float  # smaller own-seat loss than the baseline
    p2_punish_pct: float  # larger opponent loss than the baseline

    @property
    def mean_pct(self) -> float:
        return (self.p1_recovery_pct + self.p2_punish_pct) / 2.0


def recovery_stats(
    agents: list[str],
    unforced: np.ndarray,
    forced: np.ndarray,
    baseline: str = "cfr",
) -> list[Recovery]:
    """Dominated-path statistics relative to ``baseline``, from raw tables.

    Deltas are forced minus unforced margin averages of player 1's winnings.
    Seat 1: (|d_base| - |d_x|) / |d_base|. Seat 2: (|d_x| - |d_base|) / |d_base|.
    """
    if baseline not in agents:
        raise ExperimentError(f"baseline agent {baseline!r} not in table")
    d1 = forced.mean(axis=1) - unforced.mean(axis=1)
    d2 = forced.mean(axis=0) - unforced.mean(axis=0)
    b = agents.index(baseline)
    out = []
    for i, a in enumerate(agents):
        out.append(
            Recovery(
                a,
                float(d1[i]),
                float(d2[i]),
                100.0 * (abs(d1[b]) - abs(d1[i])) / abs(d1[b]),
                100.0 * (abs(d2[i]) - abs(d2[b])) / abs(d2[b]),
            )
        )
    return out


def _load_run(path: Path) -> tuple[dict, list[np.ndarray]]:
    meta_path = path / "run.json"
    if not meta_path.is_file():
        raise ExperimentError(f"{path} is not a training directory (run.json missing)")
    meta = json.loads(meta_path.read_text())
    tables = []
    for seed in meta["seeds"]:
        conv = path / f"seed_{seed}" / "convergence.csv"
        if not conv.is_file():
            raise ExperimentError(f"{path}: missing {conv.relative_to(path)}")
        header, data = read_rows(conv)
        if tuple(header) != CONVERGENCE_COLUMNS:
            raise ExperimentError(f"{conv}: unexpected columns {header}")
        tables.append(data)
    if len({t.shape for t in tables}) != 1:
        raise ExperimentError(f"{path}: seeds have different row counts (incomplete run?)")
    return meta, tables


def cmd_report(
    run_dirs: list[str | Path],
    out: str | Path,
    unforced_table: str | Path | None = None,
    forced_table: str | Path | None = None,
    baseline: str = "cfr",
) -> str:
    """Write per-run band series and return the text summary (also saved)."""
    if not run_dirs:
        raise ExperimentError("report needs at least one run directory")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    used: set[str] = set()
    for rd in map(Path, run_dirs):
        meta, tables = _load_run(rd)
        agg = aggregate(tables)
        label = f"{meta['game']}_{meta['algo']}"
        name, k = label, 2
        while name in used:
            name = f"{label}_{k}"
            k += 1
        used.add(name)
        for metric, cols in (("exploitability", (1, 2, 3)), ("total_exploitability", (4, 5, 6))):
            write_rows(
                out / f"{name}_{metric}.csv",
                ("iter", "mean", "lo", "hi"),
                [(int(r[0]), *r[list(cols)]) for r in agg],
            )
        last = agg[-1]
        lines.append(
            f"{name}: seeds={len(tables)} iter={int(last[0])} "
            f"exploitability={fmt(last[1])} [{fmt(last[2])}, {fmt(last[3])}] mb/h "
            f"total_exploitability={fmt(last[4])} [{fmt(last[5])}, {fmt(last[6])}] mb/h"
        )
    if (unforced_table is None) != (forced_table is None):
        raise ExperimentError("give both --unforced and --forced tables, or neither")
    if unforced_table is not None:
        a1, m1 = read_cross_table(unforced_table)
        a2, m2 = read_cross_table(forced_table)
        if a1 != a2:
            raise ExperimentError("unforced and forced tables list different agents")
        lines.append(f"dominated-path statistics relative to {baseline}:")
        for r in recovery_stats(a1, m1, m2, baseline):
            lines.append(
                f"  {r.agent}: p1_delta={fmt(r.p1_delta)} p2_delta={fmt(r.p2_delta)} "
                f"p1_recovery={r.p1_recovery_pct:.2f}% p2_punish={r.p2_punish_pct:.2f}% "
                f"mean={r.mean_pct:.2f}%"
            )
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    return text


def default_jobs() -> int:
    return max(1, min(4, os.cpu_count() or 1))
