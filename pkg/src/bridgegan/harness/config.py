"""Experiment configuration (JSON-loadable) and small I/O helpers."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..hybrid_gan import TrainConfig
from ..motpe import MotpeSettings

DEFAULT_DATASET = Path(__file__).resolve().parents[3] / "data" / "qm9_subset.smi"


@dataclass
class ExperimentConfig:
    dataset: str = str(DEFAULT_DATASET)
    dataset_limit: int | None = 500
    trials: int = 20
    train: TrainConfig = field(default_factory=lambda: TrainConfig(max_iterations=300))
    runs: int = 5
    molecules_per_run: int = 200
    search_molecules: int = 200
    out_dir: str = "runs/default"
    seed: int = 0
    jobs: int = 1
    timing: str = "modeled"
    n_startup: int = 10
    n_candidates: int = 24
    gamma: float = 0.25
    save_checkpoints: str = "best"

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = TrainConfig.from_dict(self.train)
        if self.trials < 1:
            raise ValueError("trial budget must be >= 1")
        if self.runs < 2:
            raise ValueError("runs must be >= 2 for statistics")
        if self.molecules_per_run < 0 or self.search_molecules < 1:
            raise ValueError("molecule counts must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.timing not in ("modeled", "wall"):
            raise ValueError("timing must be 'modeled' or 'wall'")
        if self.save_checkpoints not in ("best", "all", "none"):
            raise ValueError("save_checkpoints must be best, all or none")

    @property
    def motpe(self) -> MotpeSettings:
        return MotpeSettings(self.n_startup, self.n_candidates, self.gamma)

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def paper_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Full-size budget: 100 trials, 5000 iterations, 30 runs of 1000 molecules, whole dataset."""
    return replace(cfg, dataset_limit=None, trials=100, runs=30, molecules_per_run=1000,
                   train=replace(cfg.train, max_iterations=5000))


def derive_seed(*keys: int) -> int:
    """Stable 31-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0] & 0x7FFFFFFF)


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def append_jsonl(path: str | Path, rec: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_jsonl(path: str | Path) -> list[dict]:
    """Records of a JSONL file; a torn final line (killed writer) is ignored."""
    path = Path(path)
    if not path.exists():
        return []
    out = []
    lines = path.read_text(encoding="utf-8").splitlines()
    for k, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            if k == len(lines) - 1:
                break
            raise
    return out
