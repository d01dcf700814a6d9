from __future__ import annotations

import pytest
from hypothesis import given, settings

from bridgegan.molgraph import MolecularGraph, check_validity
from bridgegan.smiles_io import (EmptyDataset, SmilesSyntaxError, UnbalancedBranch, UnclosedRing,
                                 UnsupportedToken, load_dataset, parse_smiles, write_smiles)

from oracles import isomorphic
from test_molgraph import valid_graphs


def test_parse_examples():
    g = parse_smiles("CO")
    assert g.atoms == ("C", "O") and g.bonds == {(0, 1): "single"}
    assert parse_smiles("C#N").bonds == {(0, 1): "triple"}
    with pytest.raises(UnbalancedBranch):
        parse_smiles("C((")


def test_parse_rings_and_aromatic():
    benz = parse_smiles("c1ccccc1")
    assert set(benz.bonds.values()) == {"aromatic"} and len(benz.bonds) == 6
    cyc = parse_smiles("C1CC1")
    assert len(cyc.bonds) == 3 and check_validity(cyc)


@pytest.mark.parametrize("bad,exc", [
    ("C1CC", UnclosedRing), ("CCl", UnsupportedToken), ("C)", UnbalancedBranch),
    ("", SmilesSyntaxError), ("C=", SmilesSyntaxError), ("=C", SmilesSyntaxError),
])
def test_parse_errors(bad, exc):
    with pytest.raises(exc):
        parse_smiles(bad)


def test_write_examples():
    assert write_smiles(MolecularGraph(("C",))) == "C"
    assert write_smiles(MolecularGraph(("C", "O"), {(0, 1): "single"})) == "CO"


@settings(max_examples=200, deadline=None)
@given(valid_graphs())
def test_round_trip_random(g):
    assert isomorphic(parse_smiles(write_smiles(g)), g)


def test_round_trip_qm9_subset(qm9_path):
    ds = load_dataset(qm9_path, limit=1000)
    assert len(ds) == 1000
    for g in ds:
        assert check_validity(g)
        assert isomorphic(parse_smiles(write_smiles(g)), g)


def test_load_dataset_skips(tmp_path):
    p = tmp_path / "a.smi"
    p.write_text("CO\nC#N\n")
    assert len(load_dataset(p, limit=10)) == 2
    p.write_text("CO\nxyz\n")
    ds = load_dataset(p, limit=10)
    assert len(ds) == 1 and ds.skipped == 1
    p.write_text("xyz\n")
    with pytest.raises(EmptyDataset):
        load_dataset(p)
