"""Small end-to-end run: train (4,1,32,1) on 500 molecules for 600 iterations, then sample 200 molecules.

    python scripts/smoke_train.py [out_dir]
"""

from __future__ import annotations

import sys

from bridgegan.harness import ExperimentConfig, generate_cmd, train_cmd
from bridgegan.hybrid_gan import ArchitectureConfig, TrainConfig


def main(out_dir: str = "runs/smoke") -> None:
    cfg = ExperimentConfig(train=TrainConfig(max_iterations=600, seed=0), out_dir=out_dir)
    summary = train_cmd(ArchitectureConfig(4, 1, 32, 1), cfg)
    print("train:", summary["iterations"], "iterations,", summary["stop_reason"], summary["final"])
    gen = generate_cmd(summary["checkpoint"], 200, 1, cfg.out / "generated")
    print("generate:", gen)


if __name__ == "__main__":
    main(*sys.argv[1:2])
