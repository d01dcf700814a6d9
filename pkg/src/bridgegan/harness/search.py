"""MOTPE architecture search: suggest -> train -> score, logged to ``trials.jsonl``."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .. import chemprops
from ..hybrid_gan import (ArchitectureConfig, NonFiniteLoss, TrainConfig, modeled_train_seconds,
                          sample_graphs, train, write_trace)
from ..motpe import (ARCH_SPACE, COMPLETE, FAILED, PENDING, SearchSpace, Trial, best_by_first_objective,
                     pareto_front, suggest)
from ..smiles_io import Dataset, load_dataset
from ..tensor_nn import save_checkpoint
from .config import ExperimentConfig, append_jsonl, derive_seed, read_jsonl, write_json

log = logging.getLogger(__name__)

FAILED_SECONDS = 1.0e6
ARCH_KEYS = ("q_width", "q_depth", "c_width", "c_depth")

_DATASETS: dict[tuple[str, int | None], Dataset] = {}


def cached_dataset(path: str, limit: int | None) -> Dataset:
    key = (str(path), limit)
    if key not in _DATASETS:
        _DATASETS[key] = load_dataset(path, limit)
    return _DATASETS[key]


def evaluate_architecture(dataset: Dataset, arch: ArchitectureConfig, train_cfg: TrainConfig,
                          n_molecules: int, trace_path: Path | None = None) -> dict:
    """Train once and score a fresh hard-argmax sample of ``n_molecules``."""
    t0 = time.perf_counter()
    model, trace = train(dataset, arch, train_cfg)
    wall = time.perf_counter() - t0
    if trace_path is not None:
        write_trace(trace, trace_path)
    z = model.generator.sample_noise(np.random.default_rng([train_cfg.seed, 2]), n_molecules)
    graphs = sample_graphs(model.generator, z)
    summ = chemprops.summarize(chemprops.score_batch(graphs, dataset))
    ref = [dataset.molecules[i] for i in
           np.random.default_rng([train_cfg.seed, 3]).choice(len(dataset), min(n_molecules, len(dataset)), replace=False)]
    return {"model": model, "trace": trace, "dcs": summ["dcs"], "validity": summ["validity"],
            "qed": summ["qed"], "logp": summ["logp"], "sa": summ["sa"],
            "fd": chemprops.frechet_distance(graphs, ref), "graphs": graphs,
            "iterations": model.iterations, "stop_reason": model.stop_reason, "wall_seconds": wall}


def _run_trial(job: tuple) -> dict:
    """Worker entry point: returns a log record plus optional checkpoint payload."""
    cfg_dict, trial_id, params, seed, out_dir = job
    cfg = ExperimentConfig.from_dict(cfg_dict)
    arch = ArchitectureConfig(*(params[k] for k in ARCH_KEYS))
    train_cfg = replace(cfg.train, seed=seed)
    rec = {"id": trial_id, **{k: int(params[k]) for k in ARCH_KEYS}, "seed": seed}
    t0 = time.perf_counter()
    try:
        dataset = cached_dataset(cfg.dataset, cfg.dataset_limit)
        res = evaluate_architecture(dataset, arch, train_cfg, cfg.search_molecules,
                                    Path(out_dir) / "traces" / f"trial_{trial_id:03d}.jsonl")
    except (NonFiniteLoss, FloatingPointError, MemoryError) as exc:
        log.warning("trial %d failed: %s", trial_id, exc)
        rec.update(dcs=0.0, train_seconds=FAILED_SECONDS, state=FAILED, error=str(exc))
        return {"record": rec, "wall_seconds": time.perf_counter() - t0, "arrays": None}
    seconds = (round(res["wall_seconds"], 3) if cfg.timing == "wall"
               else modeled_train_seconds(arch, train_cfg, res["iterations"]))
    rec.update(dcs=res["dcs"], train_seconds=seconds, state=COMPLETE, validity=res["validity"],
               fd=res["fd"], iterations=res["iterations"], stop_reason=res["stop_reason"])
    model = res["model"]
    return {"record": rec, "wall_seconds": res["wall_seconds"], "arrays": model.arrays(),
            "meta": {"arch": list(arch.as_tuple()), "train_config": asdict(train_cfg),
                     "iterations": model.iterations, "stop_reason": model.stop_reason,
                     "dataset": cfg.dataset, "dataset_limit": cfg.dataset_limit, "trial": trial_id}}


def record_to_trial(rec: dict) -> Trial:
    return Trial(int(rec["id"]), {k: int(rec[k]) for k in ARCH_KEYS},
                 (-float(rec["dcs"]), float(rec["train_seconds"])), rec.get("state", COMPLETE),
                 int(rec.get("seed", 0)))


def load_trials(log_path: str | Path) -> list[dict]:
    """Log records, with any torn tail removed from disk so appends stay valid."""
    log_path = Path(log_path)
    records = read_jsonl(log_path)
    for k, rec in enumerate(records):
        if int(rec["id"]) != k:
            raise ValueError(f"{log_path}: trial ids are not 0..n-1 in order (got {rec['id']} at line {k + 1})")
    if log_path.exists():
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
        if log_path.read_text(encoding="utf-8") != text:
            log_path.write_text(text, encoding="utf-8")
    return records


def run_search(cfg: ExperimentConfig, max_new: int | None = None, space: SearchSpace = ARCH_SPACE) -> dict:
    """Run (or resume) the search until ``cfg.trials`` trials are logged.

    ``max_new`` caps how many trials this call evaluates, which is how an
    interrupted run is simulated in tests.  ``space`` may narrow the
    architecture bounds (it must stay inside them).
    """
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "trials.jsonl"
    records = load_trials(log_path)
    trials = [record_to_trial(r) for r in records]
    best_dcs = max((r["dcs"] for r in records if r.get("state") == COMPLETE), default=-np.inf)
    cfg_dict = cfg.to_dict()
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    done_now = 0
    try:
        while len(trials) < cfg.trials and (max_new is None or done_now < max_new):
            room = cfg.trials - len(trials)
            if max_new is not None:
                room = min(room, max_new - done_now)
            batch: list[Trial] = []
            for _ in range(min(cfg.jobs, room)):
                tid = len(trials) + len(batch)
                rng = np.random.default_rng([cfg.seed, tid, 17])
                params = suggest(trials + batch, space, rng, cfg.motpe)
                batch.append(Trial(tid, params, None, PENDING, derive_seed(cfg.seed, tid)))
            jobs = [(cfg_dict, t.id, t.params, t.seed, str(out)) for t in batch]
            results = list(pool.map(_run_trial, jobs)) if pool else [_run_trial(j) for j in jobs]
            for t, res in zip(batch, results):
                rec = res["record"]
                append_jsonl(log_path, rec)
                append_jsonl(out / "timings.jsonl", {"id": rec["id"], "wall_seconds": round(res["wall_seconds"], 3)})
                if res["arrays"] is not None:
                    ck = out / "checkpoints"
                    if cfg.save_checkpoints == "all":
                        save_checkpoint(ck / f"trial_{rec['id']:03d}.json", res["arrays"], res["meta"])
                    if cfg.save_checkpoints != "none" and rec["dcs"] > best_dcs:
                        save_checkpoint(ck / "best.json", res["arrays"], res["meta"])
                if rec["state"] == COMPLETE:
                    best_dcs = max(best_dcs, rec["dcs"])
                records.append(rec)
                trials.append(record_to_trial(rec))
                done_now += 1
                log.info("trial %d %s dcs=%.4f t=%.1f", rec["id"], (rec["q_width"], rec["q_depth"],
                         rec["c_width"], rec["c_depth"]), rec["dcs"], rec["train_seconds"])
    finally:
        if pool is not None:
            pool.shutdown()
    summary = summarize_search(records, cfg.n_startup)
    write_json(out / "summary.json", summary)
    complete = [r for r in records if r.get("state") == COMPLETE]
    if len(complete) >= 5:
        from .report import report
        report(log_path, out / "reports")
    return summary


def summarize_search(records: list[dict], n_startup: int = 10) -> dict:
    trials = [record_to_trial(r) for r in records]
    front = pareto_front(trials)
    best = best_by_first_objective(trials)
    by_id = {r["id"]: r for r in records}
    startup = [r["dcs"] for r in records[:n_startup] if r.get("state") == COMPLETE]
    dcs_all = [r["dcs"] for r in records if r.get("state") == COMPLETE]
    startup_median = float(np.median(startup)) if startup else 0.0
    best_rec = by_id[best.id] if best is not None else None
    return {
        "trials": len(records),
        "complete": len(dcs_all),
        "failed": sum(1 for r in records if r.get("state") == FAILED),
        "pareto_front": sorted(t.id for t in front),
        "best": best_rec,
        "median_dcs": float(np.median(dcs_all)) if dcs_all else 0.0,
        "startup_median_dcs": startup_median,
        "best_over_startup_median": (best_rec["dcs"] / startup_median
                                     if best_rec is not None and startup_median > 0 else None),
    }
