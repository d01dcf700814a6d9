"""Two-sample statistics for benchmark tables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc


class DegenerateSample(ValueError):
    pass


@dataclass(frozen=True)
class GroupComparison:
    t: float
    p: float
    d: float
    df: float
    mean_a: float
    mean_b: float

    @property
    def fold_change(self) -> float:
        return fold_change(self.mean_a, self.mean_b)


def t_sf_two_sided(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t via the regularized incomplete beta."""
    if math.isnan(t):
        return float("nan")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, betainc(df / 2.0, 0.5, x))))


def compare_groups(a: Sequence[float], b: Sequence[float]) -> GroupComparison:
    """Welch's t (Welch-Satterthwaite df, two-sided p) and Cohen's d with pooled SD."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("each group needs at least 2 samples")
    ma, mb = float(a.mean()), float(b.mean())
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise DegenerateSample("both groups have zero variance")
    se2 = va / na + vb / nb
    t = (ma - mb) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    pooled = math.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    d = (ma - mb) / pooled
    return GroupComparison(t, t_sf_two_sided(t, df), d, df, ma, mb)


def fold_change(value: float, baseline: float) -> float:
    if baseline == 0:
        return float("inf") if value > 0 else float("nan")
    return value / baseline


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation; 0.0 when either side has no variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("length mismatch")
    if len(x) < 2:
        return 0.0
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
