"""SMILES reading/writing for the QM9 heavy-atom alphabet, and dataset loading.

Supported grammar: atoms ``C N O F`` and aromatic ``c n o``; bonds ``- = # :``;
branches; ring-closure digits 1-9; ``.`` between fragments.  Bonds between two
lowercase atoms default to aromatic.  Anything else raises ``UnsupportedToken``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .molgraph import QM9_SPEC, CapacityExceeded, MolecularGraph, check_validity

log = logging.getLogger(__name__)

_ATOMS = {"C": ("C", False), "N": ("N", False), "O": ("O", False), "F": ("F", False),
          "c": ("C", True), "n": ("N", True), "o": ("O", True)}
_BOND_SYMBOLS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic"}
_SYMBOL_OF = {"single": "-", "double": "=", "triple": "#", "aromatic": ":"}


class SmilesError(ValueError):
    pass


class UnsupportedToken(SmilesError):
    pass


class UnbalancedBranch(SmilesError):
    pass


class UnclosedRing(SmilesError):
    pass


class SmilesSyntaxError(SmilesError):
    pass


class InvalidGraph(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


def parse_smiles(s: str, max_atoms: int = QM9_SPEC.n_max) -> MolecularGraph:
    if not isinstance(s, str):
        raise SmilesSyntaxError("SMILES must be text")
    s = s.strip()
    if not s:
        raise SmilesSyntaxError("empty SMILES")

    atoms: list[str] = []
    aromatic: list[bool] = []
    bonds: dict[tuple[int, int], str] = {}
    stack: list[int] = []
    rings: dict[str, tuple[int, str | None]] = {}
    prev: int | None = None
    pending: str | None = None  # explicit bond symbol awaiting its right-hand atom

    def add_bond(i: int, j: int, label: str | None) -> None:
        if i == j:
            raise SmilesSyntaxError("ring closure onto the same atom")
        key = (i, j) if i < j else (j, i)
        if key in bonds:
            raise SmilesSyntaxError(f"duplicate bond between atoms {i} and {j}")
        if label is None:
            label = "aromatic" if aromatic[i] and aromatic[j] else "single"
        bonds[key] = label

    for pos, ch in enumerate(s):
        if ch in _ATOMS:
            element, arom = _ATOMS[ch]
            atoms.append(element)
            aromatic.append(arom)
            if len(atoms) > max_atoms:
                raise CapacityExceeded(f"more than {max_atoms} heavy atoms")
            idx = len(atoms) - 1
            if prev is not None:
                add_bond(prev, idx, pending)
            elif pending is not None:
                raise SmilesSyntaxError(f"bond symbol without left atom at {pos}")
            pending = None
            prev = idx
        elif ch in _BOND_SYMBOLS:
            if pending is not None or prev is None:
                raise SmilesSyntaxError(f"misplaced bond symbol at {pos}")
            pending = _BOND_SYMBOLS[ch]
        elif ch == "(":
            if prev is None or pending is not None:
                raise UnbalancedBranch(f"branch opened without an atom at {pos}")
            stack.append(prev)
        elif ch == ")":
            if not stack:
                raise UnbalancedBranch(f"unmatched ')' at {pos}")
            if pending is not None:
                raise SmilesSyntaxError(f"dangling bond before ')' at {pos}")
            prev = stack.pop()
        elif ch.isdigit() and ch != "0":
            if prev is None:
                raise SmilesSyntaxError(f"ring digit without atom at {pos}")
            if ch in rings:
                j, label = rings.pop(ch)
                if label is not None and pending is not None and label != pending:
                    raise SmilesSyntaxError(f"conflicting ring-closure bonds for {ch}")
                add_bond(j, prev, label if label is not None else pending)
            else:
                rings[ch] = (prev, pending)
            pending = None
        elif ch == ".":
            if stack or pending is not None or prev is None:
                raise SmilesSyntaxError(f"misplaced '.' at {pos}")
            prev = None
        else:
            raise UnsupportedToken(f"unsupported token {ch!r} at {pos}")

    if stack:
        raise UnbalancedBranch("unclosed '('")
    if rings:
        raise UnclosedRing(f"unclosed ring bond(s) {sorted(rings)}")
    if pending is not None:
        raise SmilesSyntaxError("trailing bond symbol")
    return MolecularGraph(tuple(atoms), bonds)


def write_smiles(graph: MolecularGraph) -> str:
    """Depth-first SMILES from the lowest-index atom of each fragment.

    Neighbours are visited in index order.  Non-tree edges become ring closures
    using the lowest free digit.
    """
    graph = graph.compact()
    if not check_validity(graph):
        raise InvalidGraph("cannot write an invalid graph")
    n = len(graph.atoms)
    adj = {i: graph.neighbors(i) for i in range(n)}
    arom = [any(t == "aromatic" for _, t in adj[i]) for i in range(n)]

    # pass 1: DFS tree + closure edges
    visited = [False] * n
    parent = [-1] * n
    order: list[int] = []
    roots = []

    def dfs(u: int) -> None:
        visited[u] = True
        order.append(u)
        for v, _ in adj[u]:
            if not visited[v]:
                parent[v] = u
                dfs(v)

    for r in range(n):
        if not visited[r]:
            roots.append(r)
            dfs(r)
    rank = {u: k for k, u in enumerate(order)}
    closures: dict[int, list[int]] = {i: [] for i in range(n)}
    for (i, j) in graph.bonds:
        if parent[j] == i or parent[i] == j:
            continue
        closures[i].append(j)
        closures[j].append(i)

    def bond_symbol(i: int, j: int) -> str:
        t = graph.bond(i, j)
        if t == "aromatic":
            return ""
        if t == "single":
            return "-" if arom[i] and arom[j] else ""
        return _SYMBOL_OF[t]

    free = list(range(1, 10))
    open_digit: dict[tuple[int, int], int] = {}
    parts: list[str] = []

    def emit(u: int) -> None:
        sym = graph.atoms[u]
        parts.append(sym.lower() if arom[u] else sym)
        # closings first (partner already emitted), then openings; the bond
        # symbol is written on the opening side only
        ring_marks = []
        for v in sorted(closures[u]):
            key = (min(u, v), max(u, v))
            if key in open_digit:
                d = open_digit.pop(key)
                ring_marks.append(str(d))
                free.append(d)
                free.sort()
        for v in sorted(closures[u]):
            key = (min(u, v), max(u, v))
            if rank[v] > rank[u]:
                if not free:
                    raise InvalidGraph("too many simultaneous ring closures")
                d = free.pop(0)
                open_digit[key] = d
                ring_marks.append(bond_symbol(u, v) + str(d))
        parts.extend(ring_marks)
        children = [v for v, _ in adj[u] if parent[v] == u]
        for k, v in enumerate(children):
            last = k == len(children) - 1
            if not last:
                parts.append("(")
            parts.append(bond_symbol(u, v))
            emit(v)
            if not last:
                parts.append(")")

    for k, r in enumerate(roots):
        if k:
            parts.append(".")
        emit(r)
    return "".join(parts)


@dataclass(frozen=True)
class Dataset:
    molecules: tuple[MolecularGraph, ...]
    source_path: str = ""
    name: str = ""
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.molecules)

    def __iter__(self):
        return iter(self.molecules)


def load_dataset(path: str | Path, limit: int | None = None) -> Dataset:
    """Read one SMILES per line; unusable lines are skipped and counted."""
    path = Path(path)
    molecules: list[MolecularGraph] = []
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if limit is not None and len(molecules) >= limit:
                break
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            token = text.split()[0]
            try:
                g = parse_smiles(token)
            except (SmilesError, CapacityExceeded) as exc:
                skipped += 1
                log.debug("%s:%d skipped (%s)", path, lineno, exc)
                continue
            if not check_validity(g):
                skipped += 1
                log.debug("%s:%d skipped (invalid valence)", path, lineno)
                continue
            molecules.append(g)
    if skipped:
        log.warning("%s: skipped %d unusable line(s)", path, skipped)
    if not molecules:
        raise EmptyDataset(f"no usable molecules in {path}")
    return Dataset(tuple(molecules), str(path), path.stem, skipped)
