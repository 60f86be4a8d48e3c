"""Running experiments, result records and consolidated reports."""
from __future__ import annotations

import glob as globmod
import json
import math
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from filelock import FileLock

from ..errors import ConflictError, DomainError, LevyLilError
from .config import ExperimentConfig
from .experiments import get_experiment

__all__ = ["ResultRecord", "run_experiment", "load_records", "report", "LOCK_NAME"]

LOCK_NAME = ".levylil.lock"


def _plain(value):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return int(value)
    try:
        f = float(value)
    except (TypeError, ValueError):
        return str(value)
    return f if math.isfinite(f) else repr(f)


@dataclass
class ResultRecord:
    experiment: str
    config_hash: str
    seedless_hash: str
    master_seed: int
    statement: str
    family: str
    metrics: dict
    checks: dict
    started: str = ""
    finished: str = ""
    wall_seconds: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        d = dict(d)
        d.pop("passed", None)
        return cls(**d)

    def write(self, filename) -> None:
        Path(filename).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> ResultRecord:
    """Run the named experiment, write its artifacts and ``results.json``.

    Holds a lock file in the output directory for the duration of the run.
    """
    exp = get_experiment(cfg.experiment)
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with FileLock(str(out / LOCK_NAME)):
        started, t0 = _now(), time.perf_counter()
        try:
            metrics, checks = exp.runner(cfg, out)
        except LevyLilError as exc:
            raise type(exc)(f"experiment {cfg.experiment!r}: {exc}") from exc
        record = ResultRecord(
            experiment=exp.name,
            config_hash=cfg.config_hash(),
            seedless_hash=cfg.seedless_hash(),
            master_seed=cfg.master_seed,
            statement=exp.statement,
            family=exp.family,
            metrics={k: _plain(v) for k, v in metrics.items()},
            checks={k: bool(v) for k, v in checks.items()},
            started=started,
            finished=_now(),
            wall_seconds=time.perf_counter() - t0,
            config=json.loads(cfg.canonical_json()),
        )
        record.write(out / "results.json")
        cfg.save(out / "config.yaml")
    return record


def load_records(pattern) -> list[ResultRecord]:
    """Records from a directory (searched recursively) or a glob pattern."""
    p = Path(pattern)
    if p.is_dir():
        files = sorted(p.rglob("results.json"))
    else:
        files = sorted(Path(f) for f in globmod.glob(str(pattern), recursive=True))
    return [ResultRecord.from_dict(json.loads(f.read_text())) for f in files]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    # pipes would split markdown table cells
    return str(v).replace("|", "\\|")


def report(pattern, filename=None) -> str:
    """Markdown summary with one table per experiment family.

    Records sharing a config hash must agree on every metric; records that
    differ only in seed are flagged as seed variants.
    """
    records = load_records(pattern)
    if not records:
        raise DomainError(f"no result records found under {pattern!r}")
    by_hash: dict[str, ResultRecord] = {}
    for r in records:
        prev = by_hash.get(r.config_hash)
        if prev is not None and prev.metrics != r.metrics:
            raise ConflictError(f"records for config {r.config_hash[:12]} disagree on metrics")
        by_hash.setdefault(r.config_hash, r)
    seeds: dict[str, set] = {}
    for r in records:
        seeds.setdefault(r.seedless_hash, set()).add(r.master_seed)

    lines = ["# Experiment report", ""]
    n_pass = sum(r.passed for r in records)
    lines.append(f"{len(records)} records, {n_pass} passed, {len(records) - n_pass} failed")
    for family in sorted({r.family for r in records}):
        lines += ["", f"## {family}", "",
                  "| experiment | statement | seed | metric | value | passed | seed variant |",
                  "|---|---|---|---|---|---|---|"]
        for r in sorted((r for r in records if r.family == family),
                        key=lambda r: (r.experiment, r.master_seed, r.config_hash)):
            variant = "yes" if len(seeds[r.seedless_hash]) > 1 else "no"
            for k in sorted(r.metrics):
                lines.append(f"| {r.experiment} | {_fmt(r.statement)} | {r.master_seed} | {k} | "
                             f"{_fmt(r.metrics[k])} | {r.passed} | {variant} |")
    text = "\n".join(lines) + "\n"
    if filename is not None:
        Path(filename).write_text(text)
    return text
