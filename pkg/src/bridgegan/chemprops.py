"""Druglikeness scoring: descriptors, Crippen-style logP, SA-lite, QED-lite, DCS.

These are self-contained re-implementations over heavy-atom graphs.  They
follow the published constructions (Wildman-Crippen atom contributions, Ertl
fragment + complexity SA score, Bickerton desirability functions) closely
enough to rank molecules sensibly, but they are not numerically identical to
any cheminformatics toolkit.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .molgraph import (
    PAD,
    MolecularGraph,
    check_validity,
    count_atoms_bonds,
    implicit_hydrogens,
)
from .smiles_io import Dataset, InvalidGraph

ATOMIC_MASS = {"C": 12.011, "N": 14.007, "O": 15.999, "F": 18.998, "H": 1.008}

LOGP_RANGE = (-2.12, 6.26)  # raw logP mapped linearly onto [0, 1]


class EmptyReference(ValueError):
    pass


class EmptyBatch(ValueError):
    pass


# --------------------------------------------------------------------------
# graph helpers


def _adjacency(graph: MolecularGraph) -> list[list[tuple[int, str]]]:
    adj: list[list[tuple[int, str]]] = [[] for _ in graph.atoms]
    for (i, j), b in graph.bonds.items():
        adj[i].append((j, b))
        adj[j].append((i, b))
    return adj


def _connected_without(adj, src: int, dst: int, banned: tuple[int, int]) -> int | None:
    """Shortest path length src->dst avoiding edge ``banned``; None if unreachable."""
    seen = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for v, _ in adj[u]:
                if (min(u, v), max(u, v)) == banned or v in seen:
                    continue
                seen[v] = seen[u] + 1
                if v == dst:
                    return seen[v]
                nxt.append(v)
        frontier = nxt
    return None


def ring_bonds(graph: MolecularGraph) -> dict[tuple[int, int], int]:
    """Ring bonds mapped to the size of the smallest ring through them."""
    adj = _adjacency(graph)
    out = {}
    for (i, j) in graph.bonds:
        d = _connected_without(adj, i, j, (i, j))
        if d is not None:
            out[(i, j)] = d + 1
    return out


def aromatic_ring_count(graph: MolecularGraph) -> int:
    """Cyclomatic number of the aromatic-bond subgraph (E - V + components)."""
    edges = [k for k, b in graph.bonds.items() if b == "aromatic"]
    if not edges:
        return 0
    nodes = sorted({x for e in edges for x in e})
    parent = {x: x for x in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    components = len({find(x) for x in nodes})
    return len(edges) - len(nodes) + components


# --------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class Descriptors:
    mol_weight: float
    logp_raw: float
    hbond_acceptors: int
    hbond_donors: int
    tpsa: float
    rotatable_bonds: int
    aromatic_rings: int
    heavy_atoms: int


def _require_valid(graph: MolecularGraph) -> MolecularGraph:
    graph = graph.compact()
    if not check_validity(graph):
        raise InvalidGraph("descriptor input must be a valid molecule")
    return graph


def molecular_weight(graph: MolecularGraph) -> float:
    hs = implicit_hydrogens(graph)
    return sum(ATOMIC_MASS[a] for a in graph.atoms if a != PAD) + ATOMIC_MASS["H"] * sum(hs)


def _is_aromatic(adj, i) -> bool:
    return any(b == "aromatic" for _, b in adj[i])


# Ertl polar surface contributions for neutral N/O environments, keyed by
# (element, aromatic, implicit H, sorted bond labels, in 3-ring).
_TPSA = {
    ("N", False, 0, ("single", "single", "single"), False): 3.24,
    ("N", False, 0, ("single", "single", "single"), True): 3.01,
    ("N", False, 0, ("double", "single"), False): 12.36,
    ("N", False, 0, ("triple",), False): 23.79,
    ("N", False, 1, ("single", "single"), False): 12.03,
    ("N", False, 1, ("single", "single"), True): 21.94,
    ("N", False, 1, ("double",), False): 23.85,
    ("N", False, 2, ("single",), False): 26.02,
    ("N", True, 0, ("aromatic", "aromatic"), False): 12.89,
    ("N", True, 0, ("aromatic", "aromatic", "aromatic"), False): 4.41,
    ("N", True, 0, ("aromatic", "aromatic", "single"), False): 4.93,
    ("O", False, 0, ("single", "single"), False): 9.23,
    ("O", False, 0, ("single", "single"), True): 12.53,
    ("O", False, 0, ("double",), False): 17.07,
    ("O", False, 1, ("single",), False): 20.23,
    ("O", True, 0, ("aromatic", "aromatic"), False): 13.14,
}
# unmatched N/O environments fall back to a per-H-count average
_TPSA_FALLBACK = {"N": (3.24, 12.03, 26.02, 26.02), "O": (9.23, 20.23, 20.23)}


def tpsa(graph: MolecularGraph) -> float:
    adj = _adjacency(graph)
    hs = implicit_hydrogens(graph)
    rings = ring_bonds(graph)
    total = 0.0
    for i, a in enumerate(graph.atoms):
        if a not in ("N", "O"):
            continue
        labels = tuple(sorted(b for _, b in adj[i]))
        in3 = any(rings.get((min(i, j), max(i, j))) == 3 for j, _ in adj[i])
        key = (a, _is_aromatic(adj, i), hs[i], labels, in3)
        val = _TPSA.get(key)
        if val is None:
            val = _TPSA.get(key[:4] + (False,))
        if val is None:
            table = _TPSA_FALLBACK[a]
            val = table[min(hs[i], len(table) - 1)]
        total += val
    return total


def rotatable_bonds(graph: MolecularGraph) -> int:
    adj = _adjacency(graph)
    rings = ring_bonds(graph)
    n = 0
    for (i, j), b in graph.bonds.items():
        if b == "single" and (i, j) not in rings and len(adj[i]) > 1 and len(adj[j]) > 1:
            n += 1
    return n


def compute_descriptors(graph: MolecularGraph) -> Descriptors:
    graph = _require_valid(graph)
    hs = implicit_hydrogens(graph)
    hba = sum(1 for a in graph.atoms if a in ("N", "O"))
    hbd = sum(1 for a, h in zip(graph.atoms, hs) if a in ("N", "O") and h > 0)
    return Descriptors(
        mol_weight=molecular_weight(graph),
        logp_raw=crippen_logp(graph),
        hbond_acceptors=hba,
        hbond_donors=hbd,
        tpsa=tpsa(graph),
        rotatable_bonds=rotatable_bonds(graph),
        aromatic_rings=aromatic_ring_count(graph),
        heavy_atoms=len(graph.atoms),
    )


# --------------------------------------------------------------------------
# Crippen logP

# Heavy-atom contributions (Wildman & Crippen 1999 atom classes, simplified
# to the C/N/O/F environments reachable without charges).
CRIPPEN = {
    "C1": 0.1441,     # CH4, CH3-C, CH2(C)C
    "C2": 0.0000,     # CH(C)3, C(C)4
    "C3": -0.2035,    # CH3/CH2 on heteroatom
    "C4": -0.2051,    # CH/C on heteroatom
    "C5": -0.2783,    # C=heteroatom
    "C6": 0.1551,     # C=C
    "C7": 0.0017,     # sp carbon
    "C8": 0.08452,    # CH3 on aromatic
    "C10": -0.0516,   # CH2 on aromatic
    "C11": 0.1193,    # CH on aromatic
    "C12": -0.0967,   # C on aromatic
    "C18": 0.1581,    # aromatic CH
    "C19": 0.2955,    # aromatic bridgehead
    "C20": 0.2713,    # aromatic C bonded to aromatic system
    "C21": 0.1360,    # aromatic C-C(aliphatic)
    "C22": 0.4619,    # aromatic C-N
    "C23": 0.5437,    # aromatic C-O
    "C24": 0.2000,    # aromatic C-F
    "CS": 0.08129,
    "N1": -1.0190,    # NH2-C
    "N2": -0.7096,    # NH(C)C
    "N3": -1.0270,    # NH2-aromatic
    "N4": -0.5188,    # NH(aromatic)
    "N5": 0.08387,    # NH=
    "N6": 0.1836,     # N(=X)-
    "N7": -0.3187,    # N(C)(C)C
    "N8": -0.4458,    # tertiary N on aromatic
    "N9": 0.01508,    # N#
    "N11": -0.4806,   # aromatic n
    "NS": -0.4806,
    "O1": 0.1552,     # aromatic o
    "O2": -0.2893,    # alcohol
    "O3": -0.0684,    # aliphatic ether
    "O4": -0.4195,    # ether on aromatic
    "O9": -0.1526,    # carbonyl on C
    "O11": 0.4833,    # carbonyl next to heteroatom
    "OS": -0.1188,
    "F": 0.4202,
}
# hydrogen contributions by host class
CRIPPEN_H = {"H1": 0.1230, "H2": -0.2677, "H3": 0.2142, "H4": 0.2980}

_HETERO = ("N", "O", "F")


def crippen_atom_type(graph: MolecularGraph, i: int, adj=None, hs=None) -> str:
    """Simplified Wildman-Crippen class of heavy atom ``i``; falls back to *S types."""
    adj = adj if adj is not None else _adjacency(graph)
    hs = hs if hs is not None else implicit_hydrogens(graph)
    a = graph.atoms[i]
    nbrs = adj[i]
    arom = _is_aromatic(adj, i)
    if a == "F":
        return "F"
    if a == "C":
        if arom:
            n_arom = sum(1 for _, b in nbrs if b == "aromatic")
            subs = [(j, b) for j, b in nbrs if b != "aromatic"]
            if n_arom >= 3:
                return "C19"
            if not subs:
                return "C18" if hs[i] else "CS"
            j, _ = subs[0]
            other = graph.atoms[j]
            if _is_aromatic(adj, j):
                return "C20"
            return {"C": "C21", "N": "C22", "O": "C23", "F": "C24"}[other]
        orders = [b for _, b in nbrs]
        if "triple" in orders or orders.count("double") == 2:
            return "C7"
        if "double" in orders:
            partner = next(graph.atoms[j] for j, b in nbrs if b == "double")
            return "C5" if partner in _HETERO else "C6"
        if any(_is_aromatic(adj, j) for j, _ in nbrs):
            return {3: "C8", 4: "C8", 2: "C10", 1: "C11", 0: "C12"}[hs[i]]
        if any(graph.atoms[j] in _HETERO for j, _ in nbrs):
            return "C3" if hs[i] >= 2 else "C4"
        return "C1" if hs[i] >= 2 else "C2"
    if a == "N":
        if arom:
            return "N11"
        orders = [b for _, b in nbrs]
        if "triple" in orders:
            return "N9"
        if "double" in orders:
            return "N5" if hs[i] else "N6"
        on_arom = any(_is_aromatic(adj, j) for j, _ in nbrs)
        if hs[i] == 3:
            return "N1"
        if hs[i] == 2:
            return "N3" if on_arom else "N1"
        if hs[i] == 1:
            return "N4" if on_arom else "N2"
        return "N8" if on_arom else "N7"
    if a == "O":
        if arom:
            return "O1"
        orders = [b for _, b in nbrs]
        if "double" in orders:
            j = next(j for j, b in nbrs if b == "double")
            if graph.atoms[j] == "C" and any(
                graph.atoms[k] in _HETERO for k, _ in adj[j] if k != i
            ):
                return "O11"
            return "O9" if graph.atoms[j] == "C" else "OS"
        if hs[i] >= 1:
            return "O2"
        if any(_is_aromatic(adj, j) for j, _ in nbrs):
            return "O4"
        return "O3" if nbrs else "OS"
    return "CS"


def _hydrogen_type(graph: MolecularGraph, i: int, adj) -> str:
    a = graph.atoms[i]
    if a == "C":
        return "H1"
    if a == "N":
        return "H3"
    # O-H: acid-like hydrogens on O attached to C=X, otherwise alcohol
    for j, b in adj[i]:
        if graph.atoms[j] == "C" and any(bb == "double" for k, bb in adj[j] if k != i):
            return "H4"
    return "H2"


def crippen_logp(graph: MolecularGraph) -> float:
    graph = _require_valid(graph)
    adj = _adjacency(graph)
    hs = implicit_hydrogens(graph)
    total = 0.0
    for i in range(len(graph.atoms)):
        total += CRIPPEN[crippen_atom_type(graph, i, adj, hs)]
        if hs[i]:
            total += hs[i] * CRIPPEN_H[_hydrogen_type(graph, i, adj)]
    return total


# --------------------------------------------------------------------------
# SA-lite


def fragment_keys(graph: MolecularGraph) -> list[tuple]:
    """Radius-0 atom keys plus radius-1 environments for atoms with neighbours."""
    adj = _adjacency(graph)
    hs = implicit_hydrogens(graph)
    keys = []
    for i, a in enumerate(graph.atoms):
        arom = _is_aromatic(adj, i)
        keys.append((a, arom))
        if adj[i]:
            env = tuple(sorted((b, graph.atoms[j]) for j, b in adj[i]))
            keys.append((a, arom, hs[i], env))
    return keys


class FragmentTable:
    """Fragment log-frequencies over a reference set.

    A fragment seen ``c`` times across ``n`` reference molecules scores
    ``log10(c / n) + 1`` clipped to [-4, 2.5]; unseen fragments score -4.
    """

    def __init__(self, counts: Counter, n_molecules: int):
        if n_molecules <= 0:
            raise EmptyReference("reference set is empty")
        self.counts = counts
        self.n_molecules = n_molecules
        self._cache: dict[tuple, float] = {}

    @classmethod
    def from_molecules(cls, molecules: Iterable[MolecularGraph]) -> "FragmentTable":
        counts: Counter = Counter()
        n = 0
        for m in molecules:
            counts.update(fragment_keys(m))
            n += 1
        return cls(counts, n)

    def contribution(self, key: tuple) -> float:
        v = self._cache.get(key)
        if v is None:
            c = self.counts.get(key, 0)
            v = -4.0 if c == 0 else float(np.clip(math.log10(c / self.n_molecules) + 1.0, -4.0, 2.5))
            self._cache[key] = v
        return v


_TABLES: dict[int, tuple[Dataset, FragmentTable]] = {}


def fragment_table(ref: Dataset | FragmentTable | Sequence[MolecularGraph]) -> FragmentTable:
    if isinstance(ref, FragmentTable):
        return ref
    hit = _TABLES.get(id(ref))
    if hit is not None and hit[0] is ref:
        return hit[1]
    molecules = list(ref)
    if not molecules:
        raise EmptyReference("reference set is empty")
    table = FragmentTable.from_molecules(molecules)
    _TABLES[id(ref)] = (ref, table)
    return table


def complexity_penalty(graph: MolecularGraph) -> float:
    adj = _adjacency(graph)
    rings = ring_bonds(graph)
    n = len(graph.atoms)
    size = n ** 1.005 - n
    ring_degree = Counter()
    for i, j in rings:
        ring_degree[i] += 1
        ring_degree[j] += 1
    fused = sum(1 for d in ring_degree.values() if d >= 3)
    spiro = sum(1 for d in ring_degree.values() if d >= 4)
    macro = math.log10(2) if any(s > 8 for s in rings.values()) else 0.0
    branches = sum(1 for nb in adj if len(nb) >= 3)
    return size + math.log10(fused + 1) + math.log10(spiro + 1) + macro + 0.5 * math.log10(branches + 1)


def sa_score(graph: MolecularGraph, ref) -> float:
    """Synthetic accessibility on the 1 (easy) .. 10 (hard) scale."""
    graph = _require_valid(graph)
    table = fragment_table(ref)
    keys = fragment_keys(graph)
    frag = sum(table.contribution(k) for k in keys) / len(keys)
    raw = frag - complexity_penalty(graph)
    lo, hi = -4.0, 2.5
    sa = 11.0 - (raw - lo + 1.0) / (hi - lo) * 9.0
    if sa > 8.0:
        sa = 8.0 + math.log(sa + 1.0 - 9.0)
    return float(min(10.0, max(1.0, sa)))


# --------------------------------------------------------------------------
# QED-lite

# Asymmetric double-sigmoid parameters (A, B, C, D, E, F, DMAX) and mean
# weights from Bickerton et al. (2012).
ADS_PARAMS = {
    "MW": (2.817065973, 392.5754953, 290.7489764, 2.419764353, 49.22325677, 65.37051707, 104.9805561),
    "ALOGP": (3.172690585, 137.8624751, 2.534937431, 4.581497897, 0.822739154, 0.576295591, 131.3186604),
    "HBA": (2.948620388, 160.4605972, 3.615294657, 4.435986202, 0.290141953, 1.300669958, 148.7763046),
    "HBD": (1.618662227, 1010.051101, 0.985094388, 0.000000001, 0.713820843, 0.920922555, 258.1632616),
    "PSA": (1.876861559, 125.2232657, 62.90773554, 87.83366614, 12.01999824, 28.51324732, 104.5686167),
    "ROTB": (0.010000000, 272.4121427, 2.558379970, 1.566868212, 1.642335316, 14.75844999, 89.46943422),
    "AROM": (3.217788970, 957.7374108, 2.274627939, 0.000000001, 1.317690384, 0.375760881, 312.3372610),
}
QED_WEIGHTS = {"MW": 0.66, "ALOGP": 0.46, "HBA": 0.05, "HBD": 0.61, "PSA": 0.06,
               "ROTB": 0.65, "AROM": 0.48, "ALERTS": 0.95}
DESIRABILITY_FLOOR = 0.01


def _ads_raw(x: float, a, b, c, d, e, f, dmax) -> float:
    s1 = 1.0 / (1.0 + math.exp(-(x - c + d / 2.0) / e))
    s2 = 1.0 - 1.0 / (1.0 + math.exp(-(x - c - d / 2.0) / f))
    return (a + b * s1 * s2) / dmax


def _peak(params) -> tuple[float, float]:
    from scipy.optimize import minimize_scalar

    c = params[2]
    grid = np.linspace(min(-5.0, c - 200), c + 400, 20001)
    vals = [_ads_raw(float(x), *params) for x in grid]
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda x: -_ads_raw(x, *params), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), float(-res.fun)


_PEAKS = {name: _peak(p) for name, p in ADS_PARAMS.items()}


def desirability_peaks() -> dict[str, float]:
    """Descriptor value at which each desirability curve reaches 1."""
    return {name: x for name, (x, _) in _PEAKS.items()}


def desirability(name: str, x: float) -> float:
    """Curve value rescaled so the peak is exactly 1, floored at 0.01."""
    if name == "ALERTS":
        return 1.0
    val = _ads_raw(float(x), *ADS_PARAMS[name]) / _PEAKS[name][1]
    return float(min(1.0, max(DESIRABILITY_FLOOR, val)))


def qed_lite(d: Descriptors) -> float:
    values = {
        "MW": d.mol_weight, "ALOGP": d.logp_raw, "HBA": d.hbond_acceptors,
        "HBD": d.hbond_donors, "PSA": d.tpsa, "ROTB": d.rotatable_bonds,
        "AROM": d.aromatic_rings, "ALERTS": 0,
    }
    num = sum(w * math.log(desirability(k, values[k])) for k, w in QED_WEIGHTS.items())
    return math.exp(num / sum(QED_WEIGHTS.values()))


# --------------------------------------------------------------------------
# composition


@dataclass(frozen=True)
class PropertyScores:
    valid: bool
    qed: float
    logp: float
    sa: float
    dcs: float


INVALID_SCORES = PropertyScores(False, 0.0, 0.0, 0.0, 0.0)


def normalize_scores(qed_raw: float, logp_raw: float, sa_raw: float,
                     logp_range: tuple[float, float] = LOGP_RANGE) -> tuple[float, float, float]:
    qed = min(1.0, max(0.0, qed_raw))
    lo, hi = logp_range
    logp = 1.0 if logp_raw >= hi else max(0.0, (logp_raw - lo) / (hi - lo))
    sa = min(1.0, max(0.0, (10.0 - sa_raw) / 9.0))
    return qed, logp, sa


def dcs(scores: tuple[float, float, float]) -> float:
    qed, logp, sa = scores
    return 10.0 * qed * logp * sa


def score_molecule(graph: MolecularGraph, ref) -> PropertyScores:
    graph = graph.compact()
    if not check_validity(graph):
        return INVALID_SCORES
    d = compute_descriptors(graph)
    norm = normalize_scores(qed_lite(d), d.logp_raw, sa_score(graph, ref))
    return PropertyScores(True, *norm, dcs(norm))


def score_batch(graphs: Iterable[MolecularGraph], ref) -> list[PropertyScores]:
    table = fragment_table(ref)
    return [score_molecule(g, table) for g in graphs]


def summarize(scores: Sequence[PropertyScores]) -> dict[str, float]:
    """Batch means (invalid molecules included as zeros) and validity fraction."""
    if not scores:
        return {"validity": 0.0, "qed": 0.0, "logp": 0.0, "sa": 0.0, "dcs": 0.0}
    arr = np.array([[s.valid, s.qed, s.logp, s.sa, s.dcs] for s in scores], dtype=float)
    m = arr.mean(axis=0)
    return {k: float(v) for k, v in zip(("validity", "qed", "logp", "sa", "dcs"), m)}


# --------------------------------------------------------------------------
# Frechet distance


def frechet_features(graph: MolecularGraph) -> np.ndarray:
    """8-dim descriptor: heavy atoms, bond histogram (4), HBA, HBD, weight/10.

    Defined for invalid graphs too: implicit hydrogens are clamped at zero.
    """
    graph = graph.compact()
    n, hist = count_atoms_bonds(graph)
    hs = implicit_hydrogens(graph)
    hba = sum(1 for a in graph.atoms if a in ("N", "O"))
    hbd = sum(1 for a, h in zip(graph.atoms, hs) if a in ("N", "O") and h > 0)
    return np.array([n, *hist, hba, hbd, molecular_weight(graph) / 10.0], dtype=float)


def feature_sequence(graphs: Iterable[MolecularGraph]) -> np.ndarray:
    feats = [frechet_features(g) for g in graphs]
    if not feats:
        return np.zeros((0, 8))
    arr = np.stack(feats)
    order = np.lexsort(arr.T[::-1])
    return arr[order]


def discrete_frechet(p: np.ndarray, q: np.ndarray) -> float:
    """Discrete Frechet distance between point sequences (Eiter & Mannila DP)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if len(p) == 0 or len(q) == 0:
        raise EmptyBatch("Frechet distance needs non-empty sequences")
    if p.ndim == 1:
        p = p[:, None]
    if q.ndim == 1:
        q = q[:, None]
    d = np.sqrt(((p[:, None, :] - q[None, :, :]) ** 2).sum(-1))
    m, n = d.shape
    ca = np.empty((m, n))
    ca[0] = np.maximum.accumulate(d[0])
    for i in range(1, m):
        prev = ca[i - 1]
        row = ca[i]
        row[0] = max(prev[0], d[i, 0])
        # best of (i-1, j) and (i-1, j-1) is row-independent; only (i, j-1) chains
        diag = np.minimum(prev[1:], prev[:-1])
        di = d[i]
        for j in range(1, n):
            r = diag[j - 1] if diag[j - 1] < row[j - 1] else row[j - 1]
            row[j] = r if r > di[j] else di[j]
    return float(ca[-1, -1])


def frechet_distance(gen: Iterable[MolecularGraph], real: Iterable[MolecularGraph]) -> float:
    a = feature_sequence(gen)
    b = feature_sequence(real)
    if len(a) == 0 or len(b) == 0:
        raise EmptyBatch("both batches must be non-empty")
    return discrete_frechet(a, b)
