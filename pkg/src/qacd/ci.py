"""Conditional-independence testing on categorical data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np
from scipy import special

from .bn import BayesNet, Dataset
from .graph import Dag, d_separated


@dataclass(frozen=True, order=True)
class CiQuery:
    x: int
    y: int
    z: tuple[int, ...] = ()

    @classmethod
    def make(cls, x: int, y: int, z: Iterable[int] = ()) -> "CiQuery":
        z = tuple(sorted(set(z)))
        if x == y:
            raise ValueError("x and y must differ")
        if x in z or y in z:
            raise ValueError("conditioning set must exclude x and y")
        if x > y:
            x, y = y, x
        return cls(x, y, z)


@dataclass(frozen=True)
class CiResult:
    p_value: float
    statistic: float = 0.0
    dof: int = 0
    effective: bool = True


class CiProvider(Protocol):
    def test(self, x: int, y: int, z: Iterable[int] = ()) -> CiResult: ...


def chi_square_sf(x: float, k: int) -> float:
    """Upper tail of the chi-square distribution, ``Q(k/2, x/2)``."""
    if k < 1:
        raise ValueError("chi-square survival function needs dof >= 1")
    if x < 0:
        raise ValueError("chi-square statistic must be nonnegative")
    return float(special.gammaincc(0.5 * k, 0.5 * x))


def contingency_counts(d: Dataset, q: CiQuery) -> np.ndarray:
    """Joint counts of ``(x, y)`` per observed configuration of ``q.z``.

    Returns an array of shape ``(n_strata, |X|, |Y|)``; configurations of
    ``z`` that never occur are omitted.
    """
    cards = d.cardinalities
    cx, cy = cards[q.x], cards[q.y]
    xy = d.columns[q.x] * cy + d.columns[q.y]
    if q.z:
        zcode = np.ravel_multi_index(tuple(d.columns[v] for v in q.z), [cards[v] for v in q.z])
        _, stratum = np.unique(zcode, return_inverse=True)
        n_strata = int(stratum.max()) + 1 if stratum.size else 0
        counts = np.bincount(stratum * (cx * cy) + xy, minlength=n_strata * cx * cy)
    else:
        n_strata = 1 if d.n_rows else 0
        counts = np.bincount(xy, minlength=cx * cy)
    return counts.reshape(n_strata, cx, cy)


def chi_square_ci(d: Dataset, q: CiQuery, min_stratum: int = 0) -> CiResult:
    """Pearson chi-square test of ``x _||_ y | z`` summed over strata.

    No continuity correction.  Strata with fewer than ``min_stratum`` rows are
    dropped, and degrees of freedom only count rows/columns with a positive
    marginal in each stratum.  With zero degrees of freedom left the test is
    uninformative and reports ``p = 1`` with ``effective=False``.
    """
    q = CiQuery.make(q.x, q.y, q.z)
    counts = contingency_counts(d, q).astype(float)
    totals = counts.sum(axis=(1, 2))
    counts = counts[(totals > 0) & (totals >= min_stratum)]
    if counts.shape[0] == 0:
        return CiResult(1.0, 0.0, 0, False)
    rows = counts.sum(axis=2)
    cols = counts.sum(axis=1)
    tot = rows.sum(axis=1)
    dof = int(np.sum((np.count_nonzero(rows, axis=1) - 1) * (np.count_nonzero(cols, axis=1) - 1)))
    if dof <= 0:
        return CiResult(1.0, 0.0, 0, False)
    expected = rows[:, :, None] * cols[:, None, :] / tot[:, None, None]
    mask = expected > 0
    stat = float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask]))
    return CiResult(chi_square_sf(stat, dof), stat, dof, True)


class ChiSquareProvider:
    def __init__(self, data: Dataset, min_stratum: int = 0):
        self.data = data
        self.min_stratum = min_stratum

    def test(self, x, y, z=()) -> CiResult:
        return chi_square_ci(self.data, CiQuery.make(x, y, z), self.min_stratum)


class OracleProvider:
    """Answers queries by d-separation in a known DAG (p is 1.0 or 0.0)."""

    def __init__(self, graph: BayesNet | Dag):
        self.dag = graph.dag if isinstance(graph, BayesNet) else graph

    def test(self, x, y, z=()) -> CiResult:
        sep = d_separated(self.dag, x, y, z)
        return CiResult(1.0 if sep else 0.0, 0.0, 0, True)


class CachedProvider:
    """Memoizes another provider on the canonical form of each query."""

    def __init__(self, provider: CiProvider, cache: dict | None = None):
        self.provider = provider
        self.cache = {} if cache is None else cache
        self.misses = 0

    def test(self, x, y, z=()) -> CiResult:
        q = CiQuery.make(x, y, z)
        hit = self.cache.get(q)
        if hit is not None:
            return hit
        self.misses += 1
        return self.cache.setdefault(q, self.provider.test(q.x, q.y, q.z))


def cached(provider: CiProvider, cache: dict | None = None) -> CachedProvider:
    return CachedProvider(provider, cache)
