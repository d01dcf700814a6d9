"""Command line: search, train, generate, benchmark, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .hybrid_gan import ArchitectureConfig
from .harness import (ExperimentConfig, generate_cmd, paper_scale, report, run_benchmark, run_search,
                      train_cmd)
from .harness.config import write_json


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--dataset", help="SMILES file (one molecule per line)")
    p.add_argument("--limit", type=int, help="use only the first N usable molecules")
    p.add_argument("--paper-scale", action="store_true",
                   help="100 trials, 5000 iterations, 30 runs x 1000 molecules, full dataset")
    p.add_argument("--jobs", type=int, help="parallel trial evaluations")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--iterations", type=int, help="training iteration cap")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bridgegan", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("search", help="MOTPE architecture search")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--timing", choices=["modeled", "wall"])

    p = sub.add_parser("train", help="train one architecture")
    _common(p)
    p.add_argument("--arch", required=True, help="q_width,q_depth,c_width,c_depth, e.g. 7,3,227,2")

    p = sub.add_parser("generate", help="sample molecules from a checkpoint")
    _common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, default=200)

    p = sub.add_parser("benchmark", help="repeated training of architectures vs a baseline")
    _common(p)
    p.add_argument("--archs", nargs="+", required=True, help="architectures; the first is the baseline")
    p.add_argument("--baseline", type=int, default=0, help="index of the baseline architecture")
    p.add_argument("--runs", type=int)
    p.add_argument("--molecules", type=int)

    p = sub.add_parser("report", help="analysis CSVs from a trial log")
    p.add_argument("--log", required=True, type=Path)
    p.add_argument("--out", help="directory for the CSVs (default: <log dir>/reports)")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def experiment_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if getattr(args, "config", None) else ExperimentConfig()
    if args.cmd in ("train", "benchmark") and not getattr(args, "config", None):
        cfg = replace(cfg, train=replace(cfg.train, max_iterations=600))
    if args.paper_scale:
        cfg = paper_scale(cfg)
    upd = {}
    if args.dataset:
        upd["dataset"] = args.dataset
    if args.limit is not None:
        upd["dataset_limit"] = args.limit
    if args.jobs is not None:
        upd["jobs"] = args.jobs
    if args.seed is not None:
        upd["seed"] = args.seed
    if args.out:
        upd["out_dir"] = args.out
    if getattr(args, "trials", None) is not None:
        upd["trials"] = args.trials
    if getattr(args, "timing", None):
        upd["timing"] = args.timing
    if getattr(args, "runs", None) is not None:
        upd["runs"] = args.runs
    if getattr(args, "molecules", None) is not None:
        upd["molecules_per_run"] = args.molecules
    cfg = replace(cfg, **upd)
    train_upd = {}
    if args.iterations is not None:
        train_upd["max_iterations"] = args.iterations
    if args.cmd == "train" and args.seed is not None:
        train_upd["seed"] = args.seed
    if train_upd:
        cfg = replace(cfg, train=replace(cfg.train, **train_upd))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.cmd == "report":
        out = Path(args.out) if args.out else args.log.parent / "reports"
        res = report(args.log, out)
        print(json.dumps(res["pearson_r"], indent=2))
        return 0

    cfg = experiment_config(args)
    if args.cmd == "search":
        cfg.out.mkdir(parents=True, exist_ok=True)
        write_json(cfg.out / "config.json", cfg.to_dict())
        summary = run_search(cfg)
        best = summary["best"]
        if best:
            print(f"best trial {best['id']}: arch {best['q_width']},{best['q_depth']},"
                  f"{best['c_width']},{best['c_depth']} dcs {best['dcs']:.4f}")
        print(f"wrote {cfg.out / 'trials.jsonl'}")
    elif args.cmd == "train":
        summary = train_cmd(ArchitectureConfig.parse(args.arch), cfg)
        print(f"final dcs {summary['final']['dcs']:.4f} validity {summary['final']['validity']:.3f}; "
              f"checkpoint {summary['checkpoint']}")
    elif args.cmd == "generate":
        out = Path(args.out) if args.out else Path(args.ckpt).resolve().parent.parent / "generated"
        summ = generate_cmd(args.ckpt, args.n, args.seed if args.seed is not None else 0, out,
                            args.dataset, args.limit)
        print(f"{summ['n']} molecules, validity {summ['validity_pct']:.1f}%, mean DCS {summ['dcs_mean']:.4f}")
    elif args.cmd == "benchmark":
        archs = [ArchitectureConfig.parse(a) for a in args.archs]
        bench = run_benchmark(archs, cfg, baseline=args.baseline, out_dir=cfg.out)
        for row in bench.rows():
            print(f"{row['arch']:>14} dcs {row['dcs_mean']:.4f} +/- {row['dcs_std']:.4f} "
                  f"fold {row['fold_change']:.2f} p {row['p']:.3g} d {row['cohens_d']:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
