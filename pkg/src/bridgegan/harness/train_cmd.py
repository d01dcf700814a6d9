"""Single training run with checkpoint, trace and summary on disk."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

from ..hybrid_gan import ArchitectureConfig, count_parameters, modeled_train_seconds, write_trace
from .config import ExperimentConfig, write_json
from .search import cached_dataset, evaluate_architecture


def train_cmd(arch: ArchitectureConfig, cfg: ExperimentConfig, out_dir: str | Path | None = None) -> dict:
    out = Path(out_dir) if out_dir is not None else cfg.out
    dataset = cached_dataset(cfg.dataset, cfg.dataset_limit)
    res = evaluate_architecture(dataset, arch, cfg.train, cfg.search_molecules, out / "trace.jsonl")
    model = res["model"]
    ckpt = out / "checkpoints" / "model.json"
    model.save(ckpt, {"dataset": cfg.dataset, "dataset_limit": cfg.dataset_limit})
    q, c, total = count_parameters(arch)
    summary = {
        "arch": list(arch.as_tuple()),
        "params": {"quantum": q, "classical": c, "total": total},
        "iterations": res["iterations"],
        "stop_reason": res["stop_reason"],
        "final": {k: res[k] for k in ("dcs", "validity", "qed", "logp", "sa", "fd")},
        "modeled_train_seconds": modeled_train_seconds(arch, cfg.train, res["iterations"]),
        "train_config": asdict(cfg.train),
        "checkpoint": str(ckpt),
    }
    # on disk the path is relative to ``out`` so identical runs give identical files
    write_json(out / "summary.json", {**summary, "checkpoint": str(ckpt.relative_to(out))})
    return summary
