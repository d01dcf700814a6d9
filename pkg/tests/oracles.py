"""Independent reference implementations used by the tests."""

from __future__ import annotations

import itertools
from functools import lru_cache

import networkx as nx
import numpy as np

from bridgegan.molgraph import MolecularGraph

# bond orders doubled so aromatic (1.5) stays integral
_ORDER2 = {"single": 2, "double": 4, "triple": 6, "aromatic": 3}
_VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}


def to_nx(g: MolecularGraph) -> nx.Graph:
    out = nx.Graph()
    for i, a in enumerate(g.atoms):
        if a != "PAD":
            out.add_node(i, atom=a)
    for (i, j), b in g.bonds.items():
        out.add_edge(i, j, bond=b)
    return out


def isomorphic(a: MolecularGraph, b: MolecularGraph) -> bool:
    return nx.is_isomorphic(to_nx(a), to_nx(b), node_match=lambda x, y: x["atom"] == y["atom"],
                            edge_match=lambda x, y: x["bond"] == y["bond"])


def valence_oracle(atoms, bonds) -> bool:
    """Valid iff every heavy atom admits a non-negative integer H count that
    fills its valence exactly (searched exhaustively)."""
    heavy = [i for i, a in enumerate(atoms) if a != "PAD"]
    if not heavy:
        return False
    twice = [0] * len(atoms)
    for (i, j), b in bonds.items():
        twice[i] += _ORDER2[b]
        twice[j] += _ORDER2[b]
    for i in heavy:
        v = _VALENCE[atoms[i]]
        if not any(twice[i] + 2 * h == 2 * v for h in range(v + 1)):
            return False
    return True


@lru_cache(maxsize=None)
def couplings(m: int, n: int) -> np.ndarray:
    """All monotone couplings of sequences of length m and n as boolean masks (K, m, n)."""
    paths = []

    def walk(i, j, acc):
        acc = acc + [(i, j)]
        if i == m - 1 and j == n - 1:
            paths.append(acc)
            return
        if i + 1 < m:
            walk(i + 1, j, acc)
        if j + 1 < n:
            walk(i, j + 1, acc)
        if i + 1 < m and j + 1 < n:
            walk(i + 1, j + 1, acc)

    walk(0, 0, [])
    masks = np.zeros((len(paths), m, n), dtype=bool)
    for k, p in enumerate(paths):
        for i, j in p:
            masks[k, i, j] = True
    return masks


def frechet_bruteforce(p, q) -> float:
    p = np.asarray(p, dtype=float).reshape(len(p), -1)
    q = np.asarray(q, dtype=float).reshape(len(q), -1)
    d = np.sqrt(((p[:, None] - q[None]) ** 2).sum(-1))
    masks = couplings(len(p), len(q))
    return float(np.where(masks, d[None], -np.inf).max(axis=(1, 2)).min())


def fronts_bruteforce(points) -> list[set[int]]:
    """Repeatedly peel off the points no remaining point dominates (O(n^2) per front)."""
    pts = [tuple(p) for p in points]
    left = set(range(len(pts)))
    out = []

    def dom(a, b):
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    while left:
        front = {i for i in left if not any(dom(pts[j], pts[i]) for j in left if j != i)}
        out.append(front)
        left -= front
    return out


def numeric_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f`` at ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-8))


def graphs_up_to_n(max_atoms: int, labels=("C", "N", "O", "F"), bonds=("single", "double", "triple", "aromatic")):
    """Every heavy-atom graph with at most ``max_atoms`` atoms, up to node relabeling.

    Bond patterns are reduced to one representative per permutation orbit;
    all atom labelings of each representative are then emitted, which covers
    every labeled graph up to isomorphism.
    """
    options = (None,) + tuple(bonds)
    for n in range(0, max_atoms + 1):
        pairs = list(itertools.combinations(range(n), 2))
        perms = list(itertools.permutations(range(n)))
        seen = set()
        for combo in itertools.product(range(len(options)), repeat=len(pairs)):
            canon = min(
                tuple(combo[pairs.index(tuple(sorted((p[i], p[j]))))] for i, j in pairs) for p in perms
            ) if n > 1 else combo
            if canon in seen:
                continue
            seen.add(canon)
            bmap = {pr: options[c] for pr, c in zip(pairs, canon) if c}
            for atoms in itertools.product(labels, repeat=n):
                yield atoms, bmap


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]])


def _on_qubit(gate: np.ndarray, q: int, m: int) -> np.ndarray:
    # qubit 0 is the least significant bit of the basis index
    mats = [gate if k == q else np.eye(2) for k in reversed(range(m))]
    out = mats[0]
    for g in mats[1:]:
        out = np.kron(out, g)
    return out


def _cnot(c: int, t: int, m: int) -> np.ndarray:
    p0 = _on_qubit(np.diag([1.0, 0.0]), c, m)
    p1 = _on_qubit(np.diag([0.0, 1.0]), c, m)
    return p0 + p1 @ _on_qubit(np.array([[0.0, 1.0], [1.0, 0.0]]), t, m)


def circuit_state_dense(z, params, m: int, layers: int) -> np.ndarray:
    """Angle encoding RY(pi z_i) then ``layers`` x (RY on every qubit, CNOT ring), by full matrices."""
    psi = np.zeros(2 ** m)
    psi[0] = 1.0
    for q in range(m):
        psi = _on_qubit(_ry(np.pi * z[q]), q, m) @ psi
    theta = np.asarray(params).reshape(layers, m)
    ring = [] if m == 1 else [(0, 1)] if m == 2 else [(i, (i + 1) % m) for i in range(m)]
    for ell in range(layers):
        for q in range(m):
            psi = _on_qubit(_ry(theta[ell, q]), q, m) @ psi
        for c, t in ring:
            psi = _cnot(c, t, m) @ psi
    return psi


def z_expectations_dense(psi: np.ndarray, m: int) -> np.ndarray:
    return np.array([psi @ _on_qubit(np.diag([1.0, -1.0]), q, m) @ psi for q in range(m)])
