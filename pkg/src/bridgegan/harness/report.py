"""Width/depth analysis CSVs from a trial log."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from ..hybrid_gan import ArchitectureConfig, count_parameters
from ..motpe import COMPLETE, TooFewTrials
from .config import read_jsonl, write_json
from .stats import pearson_r

RATIO_BAND = (1.0, 2.7)


def top_fraction_ids(records: Sequence[dict], frac: float = 0.10) -> set[int]:
    """Ids of the best ``ceil(frac * n)`` trials by DCS (ties broken by id)."""
    k = max(1, math.ceil(frac * len(records)))
    ranked = sorted(records, key=lambda r: (-r["dcs"], r["id"]))
    return {r["id"] for r in ranked[:k]}


def _write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 10))
    if isinstance(v, bool):
        return int(v)
    return v


def report(trial_log: str | Path | Sequence[dict], out_dir: str | Path, min_trials: int = 5) -> dict:
    """Write the five analysis CSVs and ``correlations.json``; return the correlations.

    (a) quantum width-to-depth ratio, (b) qubit count, (c) classical width and
    depth, (d) quantum vs classical parameter counts, (e) training time, each
    against DCS, with the top-10% DCS trials flagged.
    """
    records = read_jsonl(trial_log) if isinstance(trial_log, (str, Path)) else list(trial_log)
    done = [r for r in records if r.get("state", COMPLETE) == COMPLETE]
    if len(done) < min_trials:
        raise TooFewTrials(f"report needs at least {min_trials} complete trials, have {len(done)}")
    out = Path(out_dir)
    top = top_fraction_ids(done)
    ids = [r["id"] for r in done]
    dcs = np.array([r["dcs"] for r in done])
    qw = np.array([r["q_width"] for r in done], dtype=float)
    qd = np.array([r["q_depth"] for r in done], dtype=float)
    cw = np.array([r["c_width"] for r in done], dtype=float)
    cd = np.array([r["c_depth"] for r in done], dtype=float)
    secs = np.array([r["train_seconds"] for r in done], dtype=float)
    ratio = qw / qd
    counts = [count_parameters(ArchitectureConfig(r["q_width"], r["q_depth"], r["c_width"], r["c_depth"]))
              for r in done]
    flag = [i in top for i in ids]

    r_ratio = pearson_r(ratio, dcs)
    r_qw = pearson_r(qw, dcs)
    r_qd = pearson_r(qd, dcs)
    r_cw = pearson_r(cw, dcs)
    r_cd = pearson_r(cd, dcs)
    r_time = pearson_r(secs, dcs)
    r_qp = pearson_r([c[0] for c in counts], dcs)
    r_cp = pearson_r([c[1] for c in counts], dcs)

    _write_csv(out / "ratio_vs_dcs.csv", ["id", "q_width", "q_depth", "ratio", "dcs", "top10", "pearson_r"],
               [[i, int(a), int(b), float(c), float(d), f, r_ratio] for i, a, b, c, d, f in zip(ids, qw, qd, ratio, dcs, flag)])
    _write_csv(out / "qubits_vs_dcs.csv", ["id", "q_width", "dcs", "top10", "pearson_r"],
               [[i, int(a), float(d), f, r_qw] for i, a, d, f in zip(ids, qw, dcs, flag)])
    _write_csv(out / "classical_vs_dcs.csv",
               ["id", "c_width", "c_depth", "dcs", "top10", "pearson_r_width", "pearson_r_depth"],
               [[i, int(a), int(b), float(d), f, r_cw, r_cd] for i, a, b, d, f in zip(ids, cw, cd, dcs, flag)])
    _write_csv(out / "param_grid.csv",
               ["id", "quantum_params", "classical_params", "total_params", "dcs", "top10",
                "pearson_r_quantum", "pearson_r_classical"],
               [[i, c[0], c[1], c[2], float(d), f, r_qp, r_cp] for i, c, d, f in zip(ids, counts, dcs, flag)])
    _write_csv(out / "time_vs_dcs.csv", ["id", "train_seconds", "dcs", "top10", "pearson_r"],
               [[i, float(s), float(d), f, r_time] for i, s, d, f in zip(ids, secs, dcs, flag)])

    top_ratios = [float(x) for x, f in zip(ratio, flag) if f]
    in_band = [RATIO_BAND[0] <= x <= RATIO_BAND[1] for x in top_ratios]
    result = {
        "n_trials": len(done),
        "pearson_r": {"ratio": r_ratio, "q_width": r_qw, "q_depth": r_qd, "c_width": r_cw,
                      "c_depth": r_cd, "train_seconds": r_time, "quantum_params": r_qp,
                      "classical_params": r_cp},
        "top10_ids": sorted(top),
        "top10_ratios": top_ratios,
        "top10_ratio_in_band": float(np.mean(in_band)) if in_band else 0.0,
        "ratio_band": list(RATIO_BAND),
    }
    write_json(out / "correlations.json", result)
    return result
