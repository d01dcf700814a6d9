"""Multi-objective TPE over small integer search spaces.

Objectives are minimized.  Completed trials are ranked by nondominated sorting
and split into a promising quarter and the rest; each dimension then gets an
independent Parzen pmf per group, and the suggestion maximizes ``l(x) / g(x)``
among candidates drawn from ``l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr

PENDING, COMPLETE, FAILED = "pending", "complete", "failed"


class ArityMismatch(ValueError):
    pass


class TooFewTrials(ValueError):
    pass


@dataclass(frozen=True)
class IntDim:
    name: str
    low: int
    high: int
    log: bool = False

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"{self.name}: low {self.low} > high {self.high}")
        if self.log and self.low <= 0:
            raise ValueError(f"{self.name}: log scale needs a positive lower bound")

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.low, self.high + 1)

    def scale(self, x):
        x = np.asarray(x, dtype=float)
        return np.log2(x) if self.log else x

    def cell_edges(self) -> np.ndarray:
        """Scaled boundaries of the integer cells ``[v - 1/2, v + 1/2]``."""
        return self.scale(np.arange(self.low, self.high + 2) - 0.5)

    @property
    def step(self) -> float:
        e = self.cell_edges()
        return float((e[-1] - e[0]) / (len(e) - 1))

    def sample_uniform(self, rng: np.random.Generator) -> int:
        e = self.cell_edges()
        u = rng.uniform(e[0], e[-1])
        k = int(np.searchsorted(e, u, side="right")) - 1
        return int(self.low + min(max(k, 0), self.high - self.low))

    def clip(self, x: int) -> int:
        return int(min(max(int(x), self.low), self.high))


@dataclass(frozen=True)
class SearchSpace:
    dims: tuple[IntDim, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dims)

    def sample_uniform(self, rng: np.random.Generator) -> dict[str, int]:
        return {d.name: d.sample_uniform(rng) for d in self.dims}

    def contains(self, params: Mapping[str, int]) -> bool:
        return all(d.low <= params[d.name] <= d.high for d in self.dims)


ARCH_SPACE = SearchSpace((IntDim("q_width", 4, 16), IntDim("q_depth", 1, 4),
                          IntDim("c_width", 16, 512, log=True), IntDim("c_depth", 1, 4)))


@dataclass
class Trial:
    id: int
    params: dict[str, int]
    objectives: tuple[float, ...] | None = None
    state: str = PENDING
    seed: int = 0
    info: dict = field(default_factory=dict)

    @property
    def finished(self) -> bool:
        return self.state in (COMPLETE, FAILED) and self.objectives is not None


# --------------------------------------------------------------------------
# dominance


def _objs(item) -> tuple[float, ...]:
    return tuple(item.objectives) if isinstance(item, Trial) else tuple(item)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    if len(a) != len(b):
        raise ArityMismatch(f"objective arity {len(a)} vs {len(b)}")
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def crowding_distance(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for k in range(points.shape[1]):
        order = np.argsort(points[:, k], kind="stable")
        col = points[order, k]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def nondominated_sort_indices(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Fronts of indices; each front ordered by crowding distance (descending, stable)."""
    pts = [tuple(map(float, o)) for o in objectives]
    n = len(pts)
    if n and len({len(p) for p in pts}) != 1:
        raise ArityMismatch("all objective vectors must have the same length")
    dominated_by = [[] for _ in range(n)]
    count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(pts[i], pts[j]):
                dominated_by[i].append(j)
                count[j] += 1
            elif dominates(pts[j], pts[i]):
                dominated_by[j].append(i)
                count[i] += 1
    fronts = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        cd = crowding_distance(np.array([pts[i] for i in current]))
        order = sorted(range(len(current)), key=lambda k: (-cd[k], k))
        fronts.append([current[k] for k in order])
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return fronts


def nondominated_sort(items: Sequence) -> list[list]:
    """Fronts of the given items (trials or objective tuples)."""
    fronts = nondominated_sort_indices([_objs(t) for t in items])
    return [[items[i] for i in f] for f in fronts]


def pareto_front(trials: Sequence) -> list:
    finished = [t for t in trials if not isinstance(t, Trial) or t.finished]
    if not finished:
        return []
    return nondominated_sort(finished)[0]


def best_by_first_objective(trials: Sequence):
    """Front member with the smallest first objective (ties: smaller second, then id)."""
    front = pareto_front(trials)
    if not front:
        return None
    return min(front, key=lambda t: (*_objs(t), getattr(t, "id", 0)))


def hypervolume_2d(points: Sequence[Sequence[float]], ref: Sequence[float]) -> float:
    """Area dominated by ``points`` and bounded by ``ref`` (minimization)."""
    pts = sorted((float(a), float(b)) for a, b in points if a < ref[0] and b < ref[1])
    hv, best_b = 0.0, float(ref[1])
    for a, b in pts:
        if b < best_b:
            hv += (ref[0] - a) * (best_b - b)
            best_b = b
    return hv


# --------------------------------------------------------------------------
# Parzen estimators


def default_target(n: int, gamma: float = 0.25) -> int:
    return int(min(max(math.ceil(gamma * n), 1), max(n - 1, 1)))


def split_trials(trials: Sequence[Trial], gamma_fn: Callable[[int], int] = default_target,
                 n_min: int = 2) -> tuple[list[Trial], list[Trial]]:
    """Greedy front-wise fill of the promising set up to ``gamma_fn(n)`` members.

    The front that overflows the target is truncated by crowding distance.
    """
    done = [t for t in trials if t.finished]
    if len(done) < n_min:
        raise TooFewTrials(f"need at least {n_min} finished trials, have {len(done)}")
    target = gamma_fn(len(done))
    promising: list[Trial] = []
    for front in nondominated_sort(done):
        room = target - len(promising)
        if room <= 0:
            break
        promising.extend(front[:room])
    chosen = {id(t) for t in promising}
    return promising, [t for t in done if id(t) not in chosen]


@dataclass(frozen=True)
class ParzenPmf:
    dim: IntDim
    pmf: np.ndarray

    def prob(self, x) -> np.ndarray:
        return self.pmf[np.asarray(x) - self.dim.low]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.dim.values, size=size, p=self.pmf)

    @property
    def mode(self) -> int:
        return int(self.dim.values[int(np.argmax(self.pmf))])


def _bandwidths(obs: np.ndarray, lo: float, hi: float, step: float, rule: str) -> np.ndarray:
    span = hi - lo
    n = len(obs)
    if rule == "sqrt":
        return np.full(n, max(span / math.sqrt(n), step))
    if rule != "neighbor":
        raise ValueError(f"unknown bandwidth rule {rule!r}")
    # distance to the farther sorted neighbour (domain edges at the ends),
    # clipped to [max(step, span / min(100, n + 1)), span]
    order = np.argsort(obs, kind="stable")
    srt = obs[order]
    padded = np.concatenate([[lo], srt, [hi]])
    sig_sorted = np.maximum(padded[1:-1] - padded[:-2], padded[2:] - padded[1:-1])
    sig = np.empty(n)
    sig[order] = sig_sorted
    return np.clip(sig, max(step, span / min(100, n + 1)), span)


def build_parzen(values: Iterable[int], dim: IntDim, bandwidth: str = "neighbor") -> ParzenPmf:
    """Uniform prior (weight 1/(n+1)) plus one truncated Gaussian per observation.

    Each kernel is integrated over the integer cells on the dimension's scale
    and renormalized to the domain.  Bandwidths follow the farther-neighbour
    rule by default; ``bandwidth="sqrt"`` uses ``max(span / sqrt(n), step)``
    for every kernel.
    """
    obs = dim.scale(np.asarray(list(values), dtype=float))
    edges = dim.cell_edges()
    widths = np.diff(edges)
    prior = widths / widths.sum()
    n = len(obs)
    if n == 0:
        return ParzenPmf(dim, prior)
    sigma = _bandwidths(obs, edges[0], edges[-1], dim.step, bandwidth)
    cdf = ndtr((edges[None, :] - obs[:, None]) / sigma[:, None])
    mass = np.diff(cdf, axis=1)
    mass /= mass.sum(axis=1, keepdims=True)
    pmf = (prior + mass.sum(axis=0)) / (n + 1)
    return ParzenPmf(dim, pmf / pmf.sum())


@dataclass(frozen=True)
class ParzenPair:
    l: ParzenPmf
    g: ParzenPmf


def build_pairs(promising: Sequence[Trial], rest: Sequence[Trial], space: SearchSpace,
                bandwidth: str = "neighbor") -> dict[str, ParzenPair]:
    return {d.name: ParzenPair(build_parzen([t.params[d.name] for t in promising], d, bandwidth),
                               build_parzen([t.params[d.name] for t in rest], d, bandwidth))
            for d in space.dims}


@dataclass(frozen=True)
class MotpeSettings:
    n_startup: int = 10
    n_candidates: int = 24
    gamma: float = 0.25
    bandwidth: str = "neighbor"
    avoid_duplicates: bool = True


def suggest(history: Sequence[Trial], space: SearchSpace, rng: np.random.Generator,
            settings: MotpeSettings = MotpeSettings()) -> dict[str, int]:
    """Next configuration: uniform during start-up, then per-dimension argmax of l/g.

    Each dimension draws ``n_candidates`` values from its ``l`` and scores them
    by ``l/g``.  With ``avoid_duplicates`` the candidate combinations are
    ranked by the product of their ratios and the best one not already in
    ``history`` (pending trials included) is returned; when the per-dimension
    winners form a new configuration this is the same as the plain argmax.
    """
    done = [t for t in history if t.finished]
    if len(done) < settings.n_startup or len(done) < 2:
        return space.sample_uniform(rng)
    promising, rest = split_trials(done, lambda n: default_target(n, settings.gamma))
    names, values, scores = [], [], []
    for name, pair in build_pairs(promising, rest, space, settings.bandwidth).items():
        cand = pair.l.sample(rng, settings.n_candidates)
        ratio = pair.l.prob(cand) / pair.g.prob(cand)
        # unique candidates, best ratio first (stable on draw order for ties)
        first = {}
        for k in np.argsort(-ratio, kind="stable"):
            first.setdefault(int(cand[k]), float(ratio[k]))
        names.append(name)
        values.append(np.array(list(first)))
        scores.append(np.log(np.array(list(first.values()))))
    best = {n: int(v[0]) for n, v in zip(names, values)}
    if not settings.avoid_duplicates:
        return best
    seen = {tuple(t.params[n] for n in names) for t in history}
    if tuple(best.values()) not in seen:
        return best
    grids = np.meshgrid(*scores, indexing="ij")
    total = sum(grids).ravel()
    for flat in np.argsort(-total, kind="stable"):
        idx = np.unravel_index(flat, tuple(len(v) for v in values))
        combo = tuple(int(values[d][i]) for d, i in enumerate(idx))
        if combo not in seen:
            return dict(zip(names, combo))
    return best


# --------------------------------------------------------------------------
# toy problem used to sanity-check the sampler


TOY_SPACE = SearchSpace((IntDim("x1", 4, 16), IntDim("x2", 1, 4)))


def toy_objectives(params: Mapping[str, int]) -> tuple[float, float]:
    """``(x1 + x2, (x1 - 10)^2 + (x2 - 10)^2)`` on the q-width x q-depth grid."""
    x1, x2 = params["x1"], params["x2"]
    return float(x1 + x2), float((x1 - 10) ** 2 + (x2 - 10) ** 2)


def toy_reference(space: SearchSpace = TOY_SPACE) -> tuple[float, float]:
    """Componentwise worst objective values over the grid."""
    a, b = space.dims
    vals = [toy_objectives({a.name: x, b.name: y}) for x in a.values for y in b.values]
    return tuple(float(max(v[k] for v in vals)) for k in range(2))


def run_toy(seed: int, budget: int = 60, method: str = "motpe", space: SearchSpace = TOY_SPACE,
            settings: MotpeSettings = MotpeSettings()) -> float:
    """Hypervolume reached on the toy bi-objective problem after ``budget`` trials."""
    rng = np.random.default_rng(seed)
    trials: list[Trial] = []
    for k in range(budget):
        if method == "motpe":
            params = suggest(trials, space, rng, settings)
        elif method == "random":
            params = space.sample_uniform(rng)
        else:
            raise ValueError(f"unknown method {method!r}")
        trials.append(Trial(k, params, toy_objectives(params), COMPLETE))
    return hypervolume_2d([t.objectives for t in trials], toy_reference(space))
