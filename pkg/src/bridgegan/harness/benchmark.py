"""Repeated-training comparison of architectures against a baseline."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..hybrid_gan import ArchitectureConfig, count_parameters
from ..smiles_io import Dataset
from .config import ExperimentConfig, derive_seed, write_json
from .search import cached_dataset, evaluate_architecture
from .stats import DegenerateSample, GroupComparison, compare_groups, fold_change

log = logging.getLogger(__name__)

METRICS = ("qed", "logp", "sa", "dcs", "validity")


@dataclass
class ArchResult:
    arch: ArchitectureConfig
    runs: list[dict] = field(default_factory=list)

    def values(self, metric: str) -> np.ndarray:
        return np.array([r[metric] for r in self.runs], dtype=float)

    def mean(self, metric: str) -> float:
        return float(self.values(metric).mean())

    def std(self, metric: str) -> float:
        v = self.values(metric)
        return float(v.std(ddof=1)) if len(v) > 1 else 0.0


@dataclass
class BenchmarkResult:
    results: list[ArchResult]
    baseline: int = 0
    comparisons: dict[int, GroupComparison | None] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        base = self.results[self.baseline]
        out = []
        for k, res in enumerate(self.results):
            q, c, _ = count_parameters(res.arch)
            row = {"arch": res.arch.label, "role": "baseline" if k == self.baseline else "candidate",
                   "runs": len(res.runs), "quantum_params": q, "classical_params": c}
            for m in METRICS:
                row[f"{m}_mean"] = res.mean(m)
                row[f"{m}_std"] = res.std(m)
            row["fold_change"] = fold_change(res.mean("dcs"), base.mean("dcs"))
            cmp = self.comparisons.get(k)
            row["t"] = cmp.t if cmp else float("nan")
            row["p"] = cmp.p if cmp else float("nan")
            row["cohens_d"] = cmp.d if cmp else float("nan")
            out.append(row)
        return out


def compare_to_baseline(results: Sequence[ArchResult], baseline: int = 0) -> dict[int, GroupComparison | None]:
    base = results[baseline].values("dcs")
    out: dict[int, GroupComparison | None] = {}
    for k, res in enumerate(results):
        if k == baseline:
            continue
        try:
            out[k] = compare_groups(res.values("dcs"), base)
        except DegenerateSample:
            out[k] = None
    return out


def run_benchmark(archs: Sequence[ArchitectureConfig], cfg: ExperimentConfig, baseline: int = 0,
                  dataset: Dataset | None = None, out_dir: str | Path | None = None) -> BenchmarkResult:
    """Train each architecture ``cfg.runs`` times and compare DCS against ``archs[baseline]``.

    Run ``r`` uses the same seed for every architecture (common random numbers).
    """
    if cfg.runs < 2:
        raise ValueError("benchmark needs at least 2 runs per architecture")
    if not 0 <= baseline < len(archs):
        raise ValueError("baseline index out of range")
    dataset = dataset if dataset is not None else cached_dataset(cfg.dataset, cfg.dataset_limit)
    results = []
    for arch in archs:
        res = ArchResult(arch)
        for r in range(cfg.runs):
            seed = derive_seed(cfg.seed, 1000 + r)
            ev = evaluate_architecture(dataset, arch, replace(cfg.train, seed=seed), cfg.molecules_per_run)
            res.runs.append({"run": r, "seed": seed, **{m: ev[m] for m in METRICS},
                             "iterations": ev["iterations"]})
            log.info("benchmark %s run %d dcs=%.4f", arch.label, r, ev["dcs"])
        results.append(res)
    bench = BenchmarkResult(results, baseline, compare_to_baseline(results, baseline))
    if out_dir is not None:
        write_benchmark(bench, out_dir)
    return bench


def _csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(round(v, 10)) if isinstance(v, float) else v) for k, v in row.items()})


def write_benchmark(bench: BenchmarkResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    _csv(out / "reports" / "benchmark.csv", bench.rows())
    per_run = [{"arch": res.arch.label, **run} for res in bench.results for run in res.runs]
    _csv(out / "reports" / "benchmark_runs.csv", per_run)
    write_json(out / "summary.json", {"benchmark": bench.rows()})
