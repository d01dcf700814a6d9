from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgegan import chemprops as cp
from bridgegan.molgraph import MolecularGraph
from bridgegan.smiles_io import load_dataset, parse_smiles

from oracles import frechet_bruteforce


@pytest.fixture(scope="module")
def ref(qm9_path):
    return load_dataset(qm9_path, limit=1000)


def test_descriptor_examples():
    d = cp.compute_descriptors(parse_smiles("C"))
    assert d.heavy_atoms == 1 and d.hbond_acceptors == 0 and d.hbond_donors == 0
    assert d.rotatable_bonds == 0 and abs(d.mol_weight - 16.04) <= 0.01
    d = cp.compute_descriptors(parse_smiles("CO"))
    assert d.hbond_acceptors == 1 and d.hbond_donors == 1
    d = cp.compute_descriptors(parse_smiles("c1ccccc1"))
    assert d.aromatic_rings == 1 and d.rotatable_bonds == 0


def test_descriptors_reject_invalid():
    with pytest.raises(ValueError):
        cp.compute_descriptors(MolecularGraph(("O", "C"), {(0, 1): "triple"}))


def test_crippen_methane():
    assert abs(cp.crippen_logp(parse_smiles("C")) - 0.636) <= 0.01


def test_sa_examples(ref):
    g = parse_smiles("C")
    sa = cp.sa_score(g, ref)
    assert 1.0 <= sa <= 3.0
    assert sa == pytest.approx(1.7387414586835206, abs=1e-12)  # regression fixture
    assert cp.sa_score(g, ref) == sa
    assert cp.sa_score(parse_smiles("O=NN=O"), [parse_smiles("C")]) >= 6.0


def test_qed_examples(ref):
    peaks = cp.desirability_peaks()
    d = cp.Descriptors(peaks["MW"], peaks["ALOGP"], peaks["HBA"], peaks["HBD"], peaks["PSA"],
                       peaks["ROTB"], peaks["AROM"], 10)
    assert cp.qed_lite(d) == pytest.approx(1.0, abs=1e-9)
    q = cp.qed_lite(cp.compute_descriptors(parse_smiles("CO")))
    assert 0.3 <= q <= 0.5
    assert q == pytest.approx(0.3904461651558256, abs=1e-12)


def test_normalize_examples():
    assert cp.normalize_scores(0.5, 6.26, 5.5)[1] == 1.0
    assert cp.normalize_scores(0.5, 0.0, 10.0)[2] == 0.0
    assert cp.normalize_scores(0.5, 0.0, 1.0)[2] == 1.0
    assert cp.normalize_scores(0.5, 2.07, 5.0)[1] == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(-10, 20), st.floats(0, 12))
def test_normalize_in_unit_cube(q, lp, sa):
    for v in cp.normalize_scores(q, lp, sa):
        assert 0.0 <= v <= 1.0


def test_dcs_examples():
    assert cp.dcs((1, 1, 1)) == 10
    assert cp.dcs((0.5, 0.5, 0.5)) == 1.25
    v = cp.dcs((0.44, 0.83, 0.33))
    assert abs(v - 1.20516) < 1e-9
    assert round(v, 3) == 1.205


def test_score_molecule(ref):
    bad = cp.score_molecule(MolecularGraph(("O", "C"), {(0, 1): "triple"}), ref)
    assert bad == cp.INVALID_SCORES
    good = cp.score_molecule(parse_smiles("CO"), ref)
    assert good.valid and good.dcs > 0
    summ = cp.summarize([bad, good])
    assert summ["validity"] == 0.5 and summ["dcs"] == pytest.approx(good.dcs / 2)


def test_frechet_example():
    assert cp.discrete_frechet([(0, 0), (1, 0)], [(0, 1), (1, 1)]) == 1.0


def test_frechet_identity_and_empty():
    p = np.random.default_rng(0).normal(size=(5, 3))
    assert cp.discrete_frechet(p, p) == 0.0
    with pytest.raises(cp.EmptyBatch):
        cp.discrete_frechet(np.zeros((0, 2)), p)


def test_frechet_exhaustive_binary():
    """Every pair of 0/1 sequences with lengths 1..6 against the coupling enumeration."""
    seqs = [s for n in range(1, 7) for s in itertools.product((0.0, 1.0), repeat=n)]
    for a in seqs:
        for b in seqs:
            assert cp.discrete_frechet(a, b) == frechet_bruteforce(a, b)


def test_frechet_random_real():
    rng = np.random.default_rng(5)
    for m in range(1, 7):
        for n in range(1, 7):
            for _ in range(10):
                p, q = rng.normal(size=(m, 3)), rng.normal(size=(n, 3))
                assert math.isclose(cp.discrete_frechet(p, q), frechet_bruteforce(p, q), rel_tol=0, abs_tol=1e-12)


def test_frechet_distance_graphs(ref):
    mols = list(ref)[:50]
    assert cp.frechet_distance(mols, mols) == 0.0
    assert cp.frechet_distance(mols[:10], mols[10:40]) > 0.0
