from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from bridgegan.cli import build_parser, experiment_config, main
from bridgegan.harness import (INVALID, SCORE_HEADER, ExperimentConfig, compare_groups, derive_seed,
                               fold_change, generate_cmd, paper_scale, pearson_r, read_jsonl, report,
                               run_benchmark, run_search, top_fraction_ids, train_cmd)
from bridgegan.harness.benchmark import ArchResult, BenchmarkResult, compare_to_baseline
from bridgegan.harness.search import load_trials
from bridgegan.harness.stats import DegenerateSample
from bridgegan.hybrid_gan import ArchitectureConfig, TrainConfig
from bridgegan.motpe import IntDim, SearchSpace, TooFewTrials

# Welch's t worked examples (Wikipedia, "Welch's t-test")
WELCH_A1 = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4]
WELCH_B1 = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4]
WELCH_A2 = [17.2, 20.9, 22.6, 18.1, 21.7, 21.4, 23.5, 24.2, 14.7, 21.8]
WELCH_B2 = [21.5, 22.8, 21.0, 23.0, 21.6, 23.6, 22.5, 20.7, 23.4, 21.8,
            20.7, 21.7, 21.5, 22.5, 23.6, 21.5, 22.5, 23.5, 21.5, 21.8]

TINY_SPACE = SearchSpace((IntDim("q_width", 4, 5), IntDim("q_depth", 1, 1),
                          IntDim("c_width", 16, 24, log=True), IntDim("c_depth", 1, 1)))


def tiny_cfg(tmp_path, **kw) -> ExperimentConfig:
    train = TrainConfig(max_iterations=3, batch_size=4, eval_interval=3, eval_molecules=8, critic_steps=1)
    base = dict(dataset_limit=60, trials=3, train=train, runs=2, molecules_per_run=10, search_molecules=10,
                out_dir=str(tmp_path / "run"), n_startup=2, save_checkpoints="all")
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------- statistics

def test_welch_examples():
    r = compare_groups(WELCH_A1, WELCH_B1)
    assert round(r.t, 4) == round(-2.455356, 4) and round(r.df, 4) == round(24.9885, 4)
    assert round(r.p, 4) == round(0.021378, 4)
    r = compare_groups(WELCH_A2, WELCH_B2)
    assert round(r.t, 4) == round(-1.565434, 4) and round(r.df, 4) == round(9.9047, 4)
    assert round(r.p, 4) == round(0.148842, 4)


@pytest.mark.parametrize("a,b", [(WELCH_A1, WELCH_B1), (WELCH_A2, WELCH_B2)])
def test_welch_matches_scipy(a, b):
    ref = sps.ttest_ind(a, b, equal_var=False)
    r = compare_groups(a, b)
    assert r.t == pytest.approx(ref.statistic, abs=1e-10)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-10)


def test_cohens_d_examples():
    assert compare_groups([1, 2, 3], [4, 5, 6]).d == pytest.approx(-3.0)
    r = compare_groups([1.0, 2.0, 4.0], [1.0, 2.0, 4.0])
    assert r.t == 0 and r.d == 0 and r.p == pytest.approx(1.0)
    # a single n=30 draw has sampling SD ~0.26, so the +-0.5 band is checked on the
    # replicate mean; each draw is checked against the pooled-SD formula
    rng = np.random.default_rng(0)
    ds = []
    for _ in range(200):
        a, b = rng.normal(0, 1, 30), rng.normal(1, 1, 30)
        d = compare_groups(a, b).d
        pooled = math.sqrt((a.var(ddof=1) + b.var(ddof=1)) / 2)
        assert d == pytest.approx((a.mean() - b.mean()) / pooled, rel=1e-12)
        ds.append(d)
    assert abs(abs(np.mean(ds)) - 1) <= 0.5
    assert abs(abs(np.mean(ds)) - 1) <= 0.1
    with pytest.raises(DegenerateSample):
        compare_groups([1, 1], [1, 1])
    with pytest.raises(ValueError):
        compare_groups([1], [1, 2])


def test_fold_change():
    assert round(fold_change(1.190, 0.524), 2) == 2.27
    assert round(fold_change(1.190, 0.539), 2) == 2.21
    assert fold_change(1.0, 0.0) == math.inf


def test_pearson():
    x = np.arange(10.0)
    assert pearson_r(x, 2 * x) == pytest.approx(1.0, abs=1e-9)
    assert pearson_r(x, np.full(10, 3.0)) == 0.0
    assert pearson_r(x, -x) == pytest.approx(-1.0)


# ---------------------------------------------------------------- report

def _synthetic_log(n=20, dcs=None):
    rng = np.random.default_rng(0)
    recs = []
    for i in range(n):
        q = int(rng.integers(4, 17))
        recs.append({"id": i, "q_width": q, "q_depth": int(rng.integers(1, 5)),
                     "c_width": int(rng.integers(16, 513)), "c_depth": int(rng.integers(1, 5)),
                     "dcs": float(2 * q) if dcs is None else dcs, "train_seconds": float(rng.uniform(1, 9)),
                     "state": "complete", "seed": i})
    return recs


def test_report_linear(tmp_path):
    res = report(_synthetic_log(), tmp_path)
    assert res["pearson_r"]["q_width"] == pytest.approx(1.0, abs=1e-9)
    for name in ("ratio_vs_dcs", "qubits_vs_dcs", "classical_vs_dcs", "param_grid", "time_vs_dcs"):
        rows = list(csv.DictReader((tmp_path / f"{name}.csv").open()))
        assert len(rows) == 20
        assert sum(int(r["top10"]) for r in rows) == 2


def test_report_constant(tmp_path):
    res = report(_synthetic_log(dcs=1.0), tmp_path)
    assert all(v == 0.0 for v in res["pearson_r"].values())


def test_report_too_few(tmp_path):
    with pytest.raises(TooFewTrials):
        report(_synthetic_log(n=3), tmp_path)


def test_top_fraction():
    recs = [{"id": i, "dcs": float(i % 7)} for i in range(25)]
    assert top_fraction_ids(recs) == {6, 13, 20}


# ---------------------------------------------------------------- search

def test_search_bookkeeping(tmp_path, qm9_path):
    cfg = tiny_cfg(tmp_path)
    summary = run_search(cfg, space=TINY_SPACE)
    recs = read_jsonl(cfg.out / "trials.jsonl")
    assert [r["id"] for r in recs] == [0, 1, 2]
    keys = {"id", "q_width", "q_depth", "c_width", "c_depth", "dcs", "train_seconds", "state", "seed"}
    assert all(keys <= set(r) and r["state"] == "complete" for r in recs)
    assert all(TINY_SPACE.contains(r) for r in recs)
    assert summary["trials"] == 3 and summary["best"] is not None
    assert len(read_jsonl(cfg.out / "timings.jsonl")) == 3
    assert (cfg.out / "checkpoints" / "trial_000.json").exists()
    assert len(list((cfg.out / "traces").glob("*.jsonl"))) == 3


def test_search_resume(tmp_path):
    full = tiny_cfg(tmp_path, trials=5, out_dir=str(tmp_path / "full"))
    run_search(full, space=TINY_SPACE)
    part = tiny_cfg(tmp_path, trials=5, out_dir=str(tmp_path / "part"))
    run_search(part, max_new=2, space=TINY_SPACE)
    assert len(read_jsonl(part.out / "trials.jsonl")) == 2
    # simulate a kill mid-write of trial 2
    with (part.out / "trials.jsonl").open("a") as fh:
        fh.write('{"id": 2, "q_wid')
    run_search(part, space=TINY_SPACE)
    recs = read_jsonl(part.out / "trials.jsonl")
    assert [r["id"] for r in recs] == [0, 1, 2, 3, 4]
    assert recs == read_jsonl(full.out / "trials.jsonl")


def test_load_trials_rejects_bad_ids(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('{"id": 0}\n{"id": 2}\n')
    with pytest.raises(ValueError):
        load_trials(p)


# ---------------------------------------------------------------- train / generate / benchmark

@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    cfg = tiny_cfg(out, out_dir=str(out))
    summary = train_cmd(ArchitectureConfig(4, 1, 16, 1), cfg)
    return out, summary


def test_train_cmd_outputs(trained):
    out, summary = trained
    assert summary["params"] == {"quantum": 4, "classical": 7883, "total": 7887}
    trace = read_jsonl(out / "trace.jsonl")
    assert {"iter", "fd", "dcs_mean", "g_loss", "c_loss", "r_loss", "lr", "wall_s"} <= set(trace[0])
    ck = json.loads((out / "checkpoints" / "model.json").read_text())
    assert ck["version"] == "ckpt-v1" and ck["meta"]["arch"] == [4, 1, 16, 1]


def test_generate_outputs(trained, tmp_path):
    out, summary = trained
    s = generate_cmd(summary["checkpoint"], 12, 3, tmp_path / "g")
    rows = list(csv.reader((tmp_path / "g" / "scores.csv").open()))
    assert rows[0] == SCORE_HEADER and len(rows) == 13
    smiles = (tmp_path / "g" / "molecules.smi").read_text().splitlines()
    assert len(smiles) == 12
    for row in rows[1:]:
        assert (row[0] == INVALID) == (row[1] == "0")
    assert s["n"] == 12 and 0 <= s["validity_pct"] <= 100


def test_generate_empty_and_deterministic(trained, tmp_path):
    _, summary = trained
    s = generate_cmd(summary["checkpoint"], 0, 1, tmp_path / "e")
    assert s["n"] == 0 and (tmp_path / "e" / "molecules.smi").read_text() == ""
    assert len((tmp_path / "e" / "scores.csv").read_text().splitlines()) == 1
    assert len((tmp_path / "e" / "generate_summary.csv").read_text().splitlines()) == 2
    generate_cmd(summary["checkpoint"], 9, 4, tmp_path / "a")
    generate_cmd(summary["checkpoint"], 9, 4, tmp_path / "b")
    for name in ("molecules.smi", "scores.csv", "generate_summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_benchmark_null_comparison(tmp_path):
    cfg = tiny_cfg(tmp_path, runs=3)
    arch = ArchitectureConfig(4, 1, 16, 1)
    bench = run_benchmark([arch, arch], cfg, out_dir=tmp_path / "bench")
    rows = bench.rows()
    # common random numbers make the two groups identical
    assert rows[1]["cohens_d"] == pytest.approx(0.0, abs=1e-12) or math.isnan(rows[1]["cohens_d"])
    assert rows[1]["p"] > 0.05 or math.isnan(rows[1]["p"])
    assert (tmp_path / "bench" / "reports" / "benchmark.csv").exists()
    assert json.loads((tmp_path / "bench" / "summary.json").read_text())["benchmark"]


def test_benchmark_table_from_injected_runs():
    arch_a, arch_b = ArchitectureConfig(7, 3, 227, 2), ArchitectureConfig(4, 1, 16, 1)
    base = ArchResult(arch_b, [{"dcs": v, "qed": 0, "logp": 0, "sa": 0, "validity": 1} for v in (0.5, 0.52, 0.552)])
    cand = ArchResult(arch_a, [{"dcs": v, "qed": 0, "logp": 0, "sa": 0, "validity": 1} for v in (1.1, 1.19, 1.28)])
    bench = BenchmarkResult([base, cand], 0, compare_to_baseline([base, cand], 0))
    row = bench.rows()[1]
    assert round(row["fold_change"], 2) == 2.27
    assert row["quantum_params"] == 21 and row["classical_params"] == 158224
    assert row["p"] < 0.05


# ---------------------------------------------------------------- config / CLI

def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(trials=7, train=TrainConfig(max_iterations=11))
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    back = ExperimentConfig.from_json(p)
    assert back == cfg
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})
    big = paper_scale(cfg)
    assert big.trials == 100 and big.train.max_iterations == 5000 and big.runs == 30
    assert big.molecules_per_run == 1000 and big.dataset_limit is None


def test_derive_seed_stable():
    assert derive_seed(0, 1) == derive_seed(0, 1) != derive_seed(0, 2)
    assert 0 <= derive_seed(5) < 2**31


def test_cli_parsing(tmp_path):
    ap = build_parser()
    args = ap.parse_args(["search", "--trials", "4", "--paper-scale", "--jobs", "2", "--seed", "9",
                          "--dataset", "x.smi", "--out", str(tmp_path)])
    cfg = experiment_config(args)
    assert cfg.trials == 4 and cfg.jobs == 2 and cfg.seed == 9 and cfg.dataset == "x.smi"
    assert cfg.train.max_iterations == 5000
    args = ap.parse_args(["train", "--arch", "7,3,227,2", "--seed", "3"])
    cfg = experiment_config(args)
    assert cfg.train.seed == 3 and cfg.train.max_iterations == 600
    with pytest.raises(SystemExit):
        ap.parse_args(["train"])


def test_cli_report(tmp_path, capsys):
    log = tmp_path / "trials.jsonl"
    log.write_text("".join(json.dumps(r) + "\n" for r in _synthetic_log()))
    assert main(["report", "--log", str(log)]) == 0
    assert (tmp_path / "reports" / "ratio_vs_dcs.csv").exists()
    assert "q_width" in capsys.readouterr().out


def test_cli_train_generate(tmp_path, capsys):
    out = tmp_path / "t"
    assert main(["train", "--arch", "4,1,16,1", "--iterations", "2", "--limit", "40", "--out", str(out)]) == 0
    assert main(["generate", "--ckpt", str(out / "checkpoints" / "model.json"), "--n", "5", "--seed", "1"]) == 0
    assert (out / "generated" / "scores.csv").exists()
    assert "validity" in capsys.readouterr().out
