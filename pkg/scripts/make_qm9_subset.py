#!/usr/bin/env python3
"""Write a deterministic QM9-style SMILES subset (<=9 heavy atoms, C/N/O/F).

The real QM9 file is not redistributable from this sandbox, so this script
grows random molecules with a QM9-like composition: mostly 8-9 heavy atoms,
carbon-rich, occasional small rings and aromatic six-rings, plus the handful
of tiny molecules that open the QM9 enumeration.

    python scripts/make_qm9_subset.py --n 5000 --seed 0 --out data/qm9_subset.smi
"""

from __future__ import annotations

import argparse
from pathlib import Path

import networkx as nx
import numpy as np

from bridgegan.molgraph import MAX_VALENCE, MolecularGraph, check_validity
from bridgegan.smiles_io import parse_smiles, write_smiles

SMALL = [
    "C", "N", "O", "C#C", "C#N", "C=O", "CC", "CO", "CC#C", "CC#N", "CC=O",
    "NC=O", "CCC", "CCO", "COC", "C1CC1", "C1CO1", "C1CN1", "CC(C)=O", "CC(N)=O",
    "NC(N)=O", "CC(C)C", "CC(C)O", "CCCC", "OCCO", "C1CCC1", "C1COC1", "FC(F)F",
]
ELEMENTS = ("C", "O", "N", "F")
ELEMENT_P = np.array([0.66, 0.16, 0.15, 0.03])
SIZES = np.arange(4, 10)
SIZE_P = np.array([1, 2, 4, 9, 20, 64], dtype=float)
SIZE_P /= SIZE_P.sum()
ORDER = {"single": 1, "double": 2, "triple": 3}


def _free(atoms, bonds, i):
    used = 0.0
    for (a, b), t in bonds.items():
        if i in (a, b):
            used += 1.5 if t == "aromatic" else ORDER[t]
    return MAX_VALENCE[atoms[i]] - used


def _aromatic_core(rng):
    ring = ["C"] * 6
    for k in rng.choice(6, size=rng.choice([0, 1, 2], p=[0.6, 0.3, 0.1]), replace=False):
        ring[k] = "N"
    bonds = {(i, (i + 1) % 6) if i < 5 else (0, 5): "aromatic" for i in range(6)}
    return ring, bonds


def random_molecule(rng) -> MolecularGraph | None:
    n = int(rng.choice(SIZES, p=SIZE_P))
    if n >= 6 and rng.random() < 0.18:
        atoms, bonds = _aromatic_core(rng)
    else:
        atoms, bonds = [str(rng.choice(ELEMENTS[:3], p=[0.7, 0.15, 0.15]))], {}
    while len(atoms) < n:
        el = str(rng.choice(ELEMENTS, p=ELEMENT_P))
        hosts = [i for i in range(len(atoms)) if _free(atoms, bonds, i) >= 1
                 and not (atoms[i] == "O" and el == "O")]
        if not hosts:
            return None
        h = int(rng.choice(hosts))
        atoms.append(el)
        bonds[(h, len(atoms) - 1)] = "single"

    g = nx.Graph(list(bonds))
    g.add_nodes_from(range(len(atoms)))
    for _ in range(rng.choice([0, 1, 2], p=[0.45, 0.4, 0.15])):
        cands = []
        for i in range(len(atoms)):
            for j in range(i + 1, len(atoms)):
                if (i, j) in bonds or "F" in (atoms[i], atoms[j]):
                    continue
                if _free(atoms, bonds, i) < 1 or _free(atoms, bonds, j) < 1:
                    continue
                if atoms[i] == atoms[j] == "O":
                    continue
                d = nx.shortest_path_length(g, i, j)
                if 2 <= d <= 5:
                    cands.append((i, j))
        if not cands:
            break
        i, j = cands[int(rng.integers(len(cands)))]
        bonds[(i, j)] = "single"
        g.add_edge(i, j)

    ring_edges = {tuple(sorted(e)) for c in nx.cycle_basis(g) for e in zip(c, c[1:] + c[:1])}
    for key in sorted(bonds):
        if bonds[key] != "single":
            continue
        i, j = key
        if "F" in (atoms[i], atoms[j]) or atoms[i] == atoms[j] == "O":
            continue
        u = rng.random()
        if u < 0.16 and _free(atoms, bonds, i) >= 1 and _free(atoms, bonds, j) >= 1:
            bonds[key] = "double"
        elif (u < 0.21 and key not in ring_edges and "O" not in (atoms[i], atoms[j])
              and _free(atoms, bonds, i) >= 2 and _free(atoms, bonds, j) >= 2):
            bonds[key] = "triple"
    mol = MolecularGraph(tuple(atoms), bonds)
    return mol if check_validity(mol) else None


def _key(mol: MolecularGraph) -> str:
    g = nx.Graph()
    for i, a in enumerate(mol.atoms):
        g.add_node(i, el=a)
    for (i, j), t in mol.bonds.items():
        g.add_edge(i, j, bt=t)
    return nx.weisfeiler_lehman_graph_hash(g, node_attr="el", edge_attr="bt", iterations=4)


def build(n: int, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    out, seen = [], set()
    for s in SMALL:
        mol = parse_smiles(s)
        seen.add(_key(mol))
        out.append(write_smiles(mol))
    while len(out) < n:
        mol = random_molecule(rng)
        if mol is None:
            continue
        k = _key(mol)
        if k in seen:
            continue
        seen.add(k)
        out.append(write_smiles(mol))
    # keep the small QM9-opening molecules first, shuffle the rest
    head, tail = out[: len(SMALL)], out[len(SMALL):]
    rng.shuffle(tail)
    return head + tail


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("data/qm9_subset.smi"))
    args = ap.parse_args()
    lines = build(args.n, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as fh:
        fh.write(f"# QM9-style synthetic subset: {len(lines)} molecules, seed {args.seed}\n")
        fh.write("# generated by scripts/make_qm9_subset.py; one SMILES per line\n")
        for s in lines:
            fh.write(s + "\n")
    print(f"wrote {len(lines)} SMILES to {args.out}")


if __name__ == "__main__":
    main()
