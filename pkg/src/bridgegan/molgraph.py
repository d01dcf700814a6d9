"""Molecular graphs: discrete form, dense one-hot tensors, and valence checks.

Atom channels are ordered ``[C, O, N, F, H, PAD]`` and bond channels
``[none, single, double, triple, aromatic]``.  Hydrogens are implicit; the H
channel exists only so the feature width matches the 6-channel encoding, and a
slot whose argmax lands on it is treated like padding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

ATOM_TYPES = ("C", "O", "N", "F", "H", "PAD")
BOND_TYPES = ("none", "single", "double", "triple", "aromatic")
HEAVY_ATOMS = ("C", "O", "N", "F")
REAL_BONDS = BOND_TYPES[1:]

MAX_VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}
BOND_ORDER = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}

PAD = "PAD"


class CapacityExceeded(ValueError):
    """More heavy atoms than the graph has slots for."""


@dataclass(frozen=True)
class GraphSpec:
    n_max: int = 9
    n_atom_types: int = 6
    n_bond_types: int = 5

    def __post_init__(self):
        if min(self.n_max, self.n_atom_types, self.n_bond_types) <= 0:
            raise ValueError("GraphSpec sizes must be positive")
        if self.n_atom_types != len(ATOM_TYPES) or self.n_bond_types != len(BOND_TYPES):
            raise ValueError("channel counts must match ATOM_TYPES / BOND_TYPES")


QM9_SPEC = GraphSpec()


@dataclass(frozen=True)
class MolecularGraph:
    """Heavy-atom graph.  ``bonds`` maps ``(i, j)`` with ``i < j`` to a bond label."""

    atoms: tuple[str, ...] = ()
    bonds: Mapping[tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        for a in atoms:
            if a not in HEAVY_ATOMS and a != PAD:
                raise ValueError(f"unknown atom label {a!r}")
        norm: dict[tuple[int, int], str] = {}
        for (i, j), b in self.bonds.items():
            if b not in REAL_BONDS:
                raise ValueError(f"unknown bond label {b!r}")
            if i == j:
                raise ValueError("self-bonds are not allowed")
            i, j = (i, j) if i < j else (j, i)
            if not (0 <= i and j < len(atoms)):
                raise ValueError(f"bond ({i}, {j}) out of range")
            if atoms[i] == PAD or atoms[j] == PAD:
                raise ValueError("bonds may not touch PAD slots")
            if (i, j) in norm and norm[(i, j)] != b:
                raise ValueError(f"conflicting labels for bond ({i}, {j})")
            norm[(i, j)] = b
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", dict(sorted(norm.items())))

    def __len__(self) -> int:
        return len(self.atoms)

    def bond(self, i: int, j: int) -> str | None:
        return self.bonds.get((i, j) if i < j else (j, i))

    def neighbors(self, i: int) -> list[tuple[int, str]]:
        out = []
        for (a, b), t in self.bonds.items():
            if a == i:
                out.append((b, t))
            elif b == i:
                out.append((a, t))
        return sorted(out)

    def compact(self) -> "MolecularGraph":
        """Drop PAD slots, re-indexing the remaining atoms in slot order."""
        keep = [i for i, a in enumerate(self.atoms) if a != PAD]
        if len(keep) == len(self.atoms):
            return self
        remap = {old: new for new, old in enumerate(keep)}
        return MolecularGraph(
            tuple(self.atoms[i] for i in keep),
            {(remap[i], remap[j]): b for (i, j), b in self.bonds.items()},
        )


def encode(graph: MolecularGraph, spec: GraphSpec = QM9_SPEC) -> tuple[np.ndarray, np.ndarray]:
    """One-hot ``(N, T)`` features and ``(N, N, Y)`` adjacency for ``graph``."""
    if len(graph.atoms) > spec.n_max:
        raise CapacityExceeded(f"{len(graph.atoms)} atoms > {spec.n_max} slots")
    n = spec.n_max
    features = np.zeros((n, spec.n_atom_types))
    pad = ATOM_TYPES.index(PAD)
    features[:, pad] = 1.0
    for i, a in enumerate(graph.atoms):
        features[i, pad] = 0.0
        features[i, ATOM_TYPES.index(a)] = 1.0
    adjacency = np.zeros((n, n, spec.n_bond_types))
    adjacency[:, :, 0] = 1.0
    for (i, j), b in graph.bonds.items():
        k = BOND_TYPES.index(b)
        for p, q in ((i, j), (j, i)):
            adjacency[p, q, 0] = 0.0
            adjacency[p, q, k] = 1.0
    return features, adjacency


def encode_batch(graphs, spec: GraphSpec = QM9_SPEC) -> tuple[np.ndarray, np.ndarray]:
    pairs = [encode(g, spec) for g in graphs]
    n, t, y = spec.n_max, spec.n_atom_types, spec.n_bond_types
    if not pairs:
        return np.zeros((0, n, t)), np.zeros((0, n, n, y))
    return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])


def discretize(features: np.ndarray, adjacency: np.ndarray) -> list[MolecularGraph]:
    """Argmax a dense batch back to graphs.

    ``np.argmax`` returns the first maximal index, which gives the lowest-channel
    tie-break.  PAD and H slots are removed and survivors re-indexed in order.
    """
    features = np.asarray(features)
    adjacency = np.asarray(adjacency)
    if features.ndim == 2:
        features, adjacency = features[None], adjacency[None]
    atom_idx = features.argmax(-1)
    # upper triangle only; symmetric input gives identical labels either way
    bond_idx = adjacency.argmax(-1)
    out = []
    for b in range(features.shape[0]):
        labels = [ATOM_TYPES[k] for k in atom_idx[b]]
        keep = [i for i, a in enumerate(labels) if a in HEAVY_ATOMS]
        remap = {old: new for new, old in enumerate(keep)}
        bonds = {}
        for x, i in enumerate(keep):
            for j in keep[x + 1:]:
                k = bond_idx[b, i, j]
                if k:
                    bonds[(remap[i], remap[j])] = BOND_TYPES[k]
        out.append(MolecularGraph(tuple(labels[i] for i in keep), bonds))
    return out


def bond_order_sums(graph: MolecularGraph) -> tuple[list[float], list[int]]:
    """Per-atom bond-order sum and aromatic-bond count."""
    sums = [0.0] * len(graph.atoms)
    arom = [0] * len(graph.atoms)
    for (i, j), b in graph.bonds.items():
        o = BOND_ORDER[b]
        sums[i] += o
        sums[j] += o
        if b == "aromatic":
            arom[i] += 1
            arom[j] += 1
    return sums, arom


def check_validity(graph: MolecularGraph) -> bool:
    """Valence check with implicit hydrogens filling the remainder.

    An atom with exactly one aromatic bond is rejected: a half-integer order
    sum is only acceptable for atoms sitting in an aromatic system.
    Connectivity is not required.
    """
    heavy = [i for i, a in enumerate(graph.atoms) if a != PAD]
    if not heavy:
        return False
    sums, arom = bond_order_sums(graph)
    for i in heavy:
        if arom[i] == 1:
            return False
        if sums[i] > MAX_VALENCE[graph.atoms[i]]:
            return False
    return True


def implicit_hydrogens(graph: MolecularGraph) -> list[int]:
    """Implicit H count per atom (clamped at 0 for over-valent atoms, 0 for PAD)."""
    sums, _ = bond_order_sums(graph)
    out = []
    for a, s in zip(graph.atoms, sums):
        if a == PAD:
            out.append(0)
        else:
            out.append(max(0, int(np.floor(MAX_VALENCE[a] - s + 1e-9))))
    return out


def count_atoms_bonds(graph: MolecularGraph) -> tuple[int, list[int]]:
    """Heavy-atom count and histogram over ``[single, double, triple, aromatic]``."""
    n = sum(1 for a in graph.atoms if a != PAD)
    hist = [0, 0, 0, 0]
    for b in graph.bonds.values():
        hist[REAL_BONDS.index(b)] += 1
    return n, hist


def check_dense_invariants(features: np.ndarray, adjacency: np.ndarray, atol: float = 1e-6) -> None:
    """Raise ``AssertionError`` unless a dense batch is row-simplex and symmetric."""
    features = np.asarray(features)
    adjacency = np.asarray(adjacency)
    assert (features >= -atol).all() and np.allclose(features.sum(-1), 1.0, atol=atol)
    assert (adjacency >= -atol).all() and np.allclose(adjacency.sum(-1), 1.0, atol=atol)
    assert np.allclose(adjacency, np.swapaxes(adjacency, -3, -2), atol=atol)
