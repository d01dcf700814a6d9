from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgegan.molgraph import (ATOM_TYPES, BOND_TYPES, HEAVY_ATOMS, QM9_SPEC, CapacityExceeded,
                                GraphSpec, MolecularGraph, check_dense_invariants, check_validity,
                                count_atoms_bonds, discretize, encode, encode_batch, implicit_hydrogens)
from bridgegan.smiles_io import parse_smiles

BENZENE = MolecularGraph(("C",) * 6, {(i, (i + 1) % 6): "aromatic" for i in range(6)})


def onehot(k, n):
    v = np.zeros(n)
    v[k] = 1.0
    return v


def test_encode_single_carbon_pads():
    x, a = encode(MolecularGraph(("C",)))
    assert x.shape == (9, 6) and a.shape == (9, 9, 5)
    assert np.array_equal(x[0], onehot(0, 6))
    for i in range(1, 9):
        assert np.array_equal(x[i], onehot(ATOM_TYPES.index("PAD"), 6))
    assert np.array_equal(a[..., 0], np.ones((9, 9)))


def test_encode_bond_symmetric():
    _, a = encode(MolecularGraph(("C", "O"), {(0, 1): "single"}))
    assert np.array_equal(a[0, 1], onehot(1, 5))
    assert np.array_equal(a[1, 0], onehot(1, 5))


def test_capacity():
    with pytest.raises(CapacityExceeded):
        encode(MolecularGraph(("C",) * 10))


def test_methanol_round_trip():
    g = parse_smiles("CO")
    x, a = encode(g)
    assert discretize(x[None], a[None])[0] == g


def test_discretize_tie_break():
    x = np.zeros((1, 9, 6))
    x[0, :, 5] = 1.0
    x[0, 0] = [0.2, 0.2, 0.2, 0.2, 0.1, 0.1]
    a = np.zeros((1, 9, 9, 5))
    a[..., 0] = 1.0
    assert discretize(x, a)[0].atoms == ("C",)


def test_validity_examples():
    assert check_validity(MolecularGraph(("C",)))
    assert not check_validity(MolecularGraph(("O", "C"), {(0, 1): "triple"}))
    assert check_validity(BENZENE)
    assert not check_validity(MolecularGraph())


def test_count_atoms_bonds():
    assert count_atoms_bonds(MolecularGraph()) == (0, [0, 0, 0, 0])
    assert count_atoms_bonds(parse_smiles("C=O")) == (2, [0, 1, 0, 0])
    assert count_atoms_bonds(BENZENE) == (6, [0, 0, 0, 6])


def test_implicit_hydrogens():
    assert implicit_hydrogens(parse_smiles("CO")) == [3, 1]
    assert implicit_hydrogens(BENZENE) == [1] * 6


def test_graph_rejects_bad_input():
    with pytest.raises(ValueError):
        MolecularGraph(("C", "Xe"))
    with pytest.raises(ValueError):
        MolecularGraph(("C",), {(0, 0): "single"})
    with pytest.raises(ValueError):
        MolecularGraph(("C", "PAD"), {(0, 1): "single"})
    with pytest.raises(ValueError):
        GraphSpec(n_max=0)


@st.composite
def valid_graphs(draw):
    n = draw(st.integers(1, 9))
    atoms = tuple(draw(st.sampled_from(HEAVY_ATOMS)) for _ in range(n))
    bonds = {}
    for i in range(n):
        for j in range(i + 1, n):
            b = draw(st.sampled_from(("none", "none", "single", "double")))
            if b != "none":
                bonds[(i, j)] = b
                if not check_validity(MolecularGraph(atoms, bonds)):
                    del bonds[(i, j)]
    return MolecularGraph(atoms, bonds)


@settings(max_examples=150, deadline=None)
@given(valid_graphs())
def test_encode_discretize_identity(g):
    x, a = encode(g)
    check_dense_invariants(x, a)
    assert discretize(x[None], a[None])[0] == g


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_discretize_idempotent(seed):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(6), size=(3, 9))
    a = rng.dirichlet(np.ones(5), size=(3, 9, 9))
    a = (a + a.transpose(0, 2, 1, 3)) / 2
    once = discretize(x, a)
    twice = discretize(*encode_batch(once))
    assert once == twice


def test_encode_batch_empty():
    x, a = encode_batch([])
    assert x.shape == (0, 9, 6) and a.shape == (0, 9, 9, 5)
    assert QM9_SPEC.n_max == 9 and len(BOND_TYPES) == 5
