"""Experiment configuration: YAML documents with a canonical JSON digest."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import DomainError
from ..process_sim import ProcessSpec, process_from_dict
from ..scale_functions import Power, ScaleFunction, scale_from_dict

__all__ = ["ExperimentConfig", "THREADS_ENV", "default_threads", "load_config"]

THREADS_ENV = "LEVYLIL_THREADS"

# fields that change where or how fast a run happens but never its numbers
_UNHASHED = ("threads", "output_dir")


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


@dataclass
class ExperimentConfig:
    experiment: str
    process: ProcessSpec
    V: ScaleFunction = field(default_factory=lambda: Power(1.0))
    phi: ScaleFunction | None = None
    grid: dict = field(default_factory=dict)
    ladder: dict = field(default_factory=dict)
    n_paths: int = 1000
    master_seed: int = 0
    output_dir: str = "results"
    threads: int = 1
    params: dict = field(default_factory=dict)

    @property
    def time_scale(self) -> ScaleFunction:
        """``phi`` if given, else the process's own time-scale function."""
        return self.phi if self.phi is not None else self.process.phi()

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "process": self.process.to_dict(),
            "V": self.V.to_dict(),
            "phi": None if self.phi is None else self.phi.to_dict(),
            "grid": copy.deepcopy(self.grid),
            "ladder": copy.deepcopy(self.ladder),
            "n_paths": int(self.n_paths),
            "master_seed": int(self.master_seed),
            "output_dir": str(self.output_dir),
            "threads": int(self.threads),
            "params": copy.deepcopy(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"experiment", "process", "V", "phi", "grid", "ladder", "n_paths",
                 "master_seed", "output_dir", "threads", "params"}
        extra = set(data) - known
        if extra:
            raise DomainError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in data or "process" not in data:
            raise DomainError("config needs 'experiment' and 'process'")
        return cls(
            experiment=str(data["experiment"]),
            process=process_from_dict(data["process"]),
            V=scale_from_dict(data["V"]) if data.get("V") else Power(1.0),
            phi=scale_from_dict(data["phi"]) if data.get("phi") else None,
            grid=dict(data.get("grid") or {}),
            ladder=dict(data.get("ladder") or {}),
            n_paths=int(data.get("n_paths", 1000)),
            master_seed=int(data.get("master_seed", 0)),
            output_dir=str(data.get("output_dir", "results")),
            threads=int(data.get("threads", default_threads())),
            params=dict(data.get("params") or {}),
        )

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        data = yaml.safe_load(text)
        if not isinstance(data, dict):
            raise DomainError("config document must be a mapping")
        return cls.from_dict(data)

    def save(self, filename) -> None:
        Path(filename).write_text(self.dumps())

    def canonical_json(self) -> str:
        d = self.to_dict()
        for key in _UNHASHED:
            d.pop(key)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def seedless_hash(self) -> str:
        """Digest ignoring the seed; equal values mark seed variants."""
        d = json.loads(self.canonical_json())
        d.pop("master_seed")
        return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        for k, v in changes.items():
            if v is not None:
                d[k] = v.to_dict() if hasattr(v, "to_dict") else v
        return ExperimentConfig.from_dict(d)


def load_config(filename) -> ExperimentConfig:
    return ExperimentConfig.loads(Path(filename).read_text())
