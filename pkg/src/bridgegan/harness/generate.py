"""Sample molecules from a checkpoint and score them."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .. import chemprops
from ..hybrid_gan import load_trained, sample_graphs
from ..molgraph import check_validity
from ..smiles_io import write_smiles
from .config import DEFAULT_DATASET
from .search import cached_dataset

INVALID = "!invalid"
SCORE_HEADER = ["smiles", "valid", "qed", "logp", "sa", "dcs"]


def _num(v: float) -> str:
    return repr(round(float(v), 10))


def generate_cmd(checkpoint: str | Path, n: int, seed: int, out_dir: str | Path,
                 dataset: str | None = None, dataset_limit: int | None = None) -> dict:
    """Write ``molecules.smi``, ``scores.csv`` and ``generate_summary.csv`` under ``out_dir``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    model = load_trained(checkpoint)
    if dataset is None:
        dataset = model.meta.get("dataset") or str(DEFAULT_DATASET)
        dataset_limit = model.meta.get("dataset_limit", dataset_limit)
    ref = cached_dataset(dataset, dataset_limit)
    z = model.generator.sample_noise(np.random.default_rng(seed), n)
    graphs = sample_graphs(model.generator, z)
    scores = chemprops.score_batch(graphs, ref)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    smiles = []
    for g, s in zip(graphs, scores):
        compact = g.compact()
        smiles.append(write_smiles(compact) if s.valid and check_validity(compact) else INVALID)
    with (out / "molecules.smi").open("w", encoding="utf-8") as fh:
        for s in smiles:
            fh.write(s + "\n")
    with (out / "scores.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_HEADER)
        for smi, s in zip(smiles, scores):
            w.writerow([smi, int(s.valid), _num(s.qed), _num(s.logp), _num(s.sa), _num(s.dcs)])
    summ = chemprops.summarize(scores)
    summary = {"n": n, "seed": seed, "validity_pct": 100.0 * summ["validity"], "dcs_mean": summ["dcs"],
               "qed_mean": summ["qed"], "logp_mean": summ["logp"], "sa_mean": summ["sa"]}
    with (out / "generate_summary.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(summary))
        w.writerow([_num(v) if isinstance(v, float) else v for v in summary.values()])
    return summary
