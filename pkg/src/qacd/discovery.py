"""Quantitative-argumentation causal discovery.

Phase I tests every pair over a bounded family of conditioning sets, keeps a
permissive candidate skeleton and one representative independence argument
per pair.  Phase II repeatedly attenuates edge acceptabilities by direct
attacks from those arguments and by attacks propagated through length-2
witness connections, then the thresholded skeleton is oriented.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .ci import CiProvider
from .graph import Pdag, Skeleton, orient_colliders


@dataclass(frozen=True)
class QacdParams:
    alpha: float = 0.05
    delta_cand: float = 0.05
    delta0: float = 0.05
    k_max: int = 3
    lam: float = 0.5
    t_max: int = 20
    epsilon: float = 1e-4
    max_sets_per_size: int = 50
    seed: int = 0
    propagate_noncandidate_tau: bool = True
    # zero-dof tests carry no evidence; keep them out of p_min and the argmax
    skip_degenerate: bool = True

    def __post_init__(self):
        for name in ("alpha", "delta_cand", "delta0"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not 0 <= self.lam <= 1:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.t_max < 0 or self.k_max < 0 or self.max_sets_per_size < 1:
            raise ValueError("t_max, k_max must be >= 0 and max_sets_per_size >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class IndependenceArgument:
    pair: tuple[int, int]
    z_star: tuple[int, ...]
    p: float
    sigma0: float


class CiPool:
    """One representative independence argument per unordered pair."""

    def __init__(self, n: int, arguments: dict[tuple[int, int], IndependenceArgument] | None = None):
        self.n = n
        self._args = dict(arguments or {})

    def __getitem__(self, pair) -> IndependenceArgument:
        x, y = pair
        return self._args[(x, y) if x < y else (y, x)]

    def __setitem__(self, pair, arg: IndependenceArgument):
        x, y = pair
        self._args[(x, y) if x < y else (y, x)] = arg

    def __contains__(self, pair) -> bool:
        x, y = pair
        return ((x, y) if x < y else (y, x)) in self._args

    def __iter__(self) -> Iterator[IndependenceArgument]:
        return (self._args[k] for k in sorted(self._args))

    def __len__(self) -> int:
        return len(self._args)

    def sepset(self, x: int, y: int) -> tuple[int, ...]:
        return self[x, y].z_star


class WitnessTriple(NamedTuple):
    x: int
    w: int
    y: int


@dataclass
class QacdTrace:
    max_change: list[float] = field(default_factory=list)
    snapshots: list[np.ndarray] | None = None
    converged: bool = False
    s_final: np.ndarray | None = None
    candidate: Skeleton | None = None

    @property
    def iterations(self) -> int:
        return len(self.max_change)

    def to_json(self) -> str:
        return json.dumps({
            "s_final": None if self.s_final is None else self.s_final.tolist(),
            "max_change_per_iter": self.max_change,
            "converged": self.converged,
            "iterations": self.iterations,
        })


def base_strength(p: float, alpha: float) -> float:
    """Independence strength of a p-value: 0 below alpha, linear above."""
    if p < alpha:
        return 0.0
    return (p - alpha) / (1.0 - alpha)


# ---------------------------------------------------------------------------
# Phase I


def conditioning_sets(x: int, y: int, n_vars: int, params: QacdParams) -> list[tuple[int, ...]]:
    """Conditioning sets tested for a pair, ordered by size then lexicographically.

    Sizes with more than ``max_sets_per_size`` subsets are sampled uniformly
    without replacement from a generator keyed on ``(seed, x, y, k)``.
    """
    others = [v for v in range(n_vars) if v not in (x, y)]
    sets: list[tuple[int, ...]] = [()]
    cap = params.max_sets_per_size
    for k in range(1, min(params.k_max, len(others)) + 1):
        if math.comb(len(others), k) <= cap:
            sets.extend(itertools.combinations(others, k))
            continue
        rng = np.random.default_rng([params.seed, x, y, k])
        chosen: set[tuple[int, ...]] = set()
        while len(chosen) < cap:
            idx = rng.choice(len(others), size=k, replace=False)
            chosen.add(tuple(sorted(others[i] for i in idx)))
        sets.extend(sorted(chosen))
    return sets


def phase1_candidates(provider: CiProvider, n_vars: int, params: QacdParams) -> tuple[Skeleton, CiPool]:
    edges = set()
    pool = CiPool(n_vars)
    for x, y in itertools.combinations(range(n_vars), 2):
        p_min = math.inf
        best_p, best_z = -math.inf, ()
        for z in conditioning_sets(x, y, n_vars, params):
            res = provider.test(x, y, z)
            if params.skip_degenerate and not res.effective:
                continue
            p_min = min(p_min, res.p_value)
            # strict '>' keeps the earliest (smallest) set on ties
            if res.p_value > best_p:
                best_p, best_z = res.p_value, z
        if best_p < 0:
            # every test was degenerate: fall back to the provider's convention
            best_p = 1.0
        pool[x, y] = IndependenceArgument((x, y), best_z, best_p, base_strength(best_p, params.alpha))
        if p_min < params.delta_cand:
            edges.add((x, y))
    return Skeleton(n_vars, frozenset(edges)), pool


# ---------------------------------------------------------------------------
# Phase II


def witness_triples(cand: Skeleton) -> list[WitnessTriple]:
    """All ``x - w - y`` paths in ``cand`` with ``x < y`` (adjacency of x, y irrelevant)."""
    adj = cand.adjacency()
    out = []
    for w in range(cand.n):
        for x, y in itertools.combinations(sorted(adj[w]), 2):
            out.append(WitnessTriple(x, w, y))
    out.sort()
    return out


def initial_acceptability(cand: Skeleton) -> np.ndarray:
    s = np.zeros((cand.n, cand.n))
    for a, b in cand.edges:
        s[a, b] = s[b, a] = 1.0
    return s


class _Attenuation:
    """Precomputed direct factors and witness weights for a fixed pool."""

    def __init__(self, n: int, triples, pool: CiPool, params: QacdParams, cand: Skeleton | None = None):
        lam = params.lam
        self.direct = np.ones((n, n))
        for arg in pool:
            x, y = arg.pair
            self.direct[x, y] = self.direct[y, x] = 1.0 - lam * arg.sigma0
        keep = []
        for t in triples:
            arg = pool[t.x, t.y]
            if arg.sigma0 == 0.0 or t.w in arg.z_star:
                continue
            if not params.propagate_noncandidate_tau and cand is not None and not cand.adjacent(t.x, t.y):
                continue
            keep.append((t.x, t.w, t.y, 0.5 * lam * arg.sigma0))
        arr = np.array(keep, dtype=float).reshape(-1, 4)
        self.tx = arr[:, 0].astype(np.intp)
        self.tw = arr[:, 1].astype(np.intp)
        self.ty = arr[:, 2].astype(np.intp)
        self.weight = arr[:, 3]

    def __call__(self, s: np.ndarray) -> np.ndarray:
        a = self.direct.copy()
        if self.weight.size:
            f = 1.0 - self.weight * s[self.tx, self.tw] * s[self.tw, self.ty]
            np.multiply.at(a, (self.tx, self.tw), f)
            np.multiply.at(a, (self.tw, self.tx), f)
            np.multiply.at(a, (self.tw, self.ty), f)
            np.multiply.at(a, (self.ty, self.tw), f)
        return a


def build_attenuation(s: np.ndarray, triples, pool: CiPool, params: QacdParams,
                      cand: Skeleton | None = None) -> np.ndarray:
    """Attenuation matrix for state ``s``.

    Every pair gets its direct factor ``1 - lam * sigma0``; every witness
    triple ``x - w - y`` with ``w`` outside the argument's conditioning set
    multiplies both bridging entries by ``1 - lam/2 * sigma0 * s_xw * s_wy``.
    """
    return _Attenuation(s.shape[0], triples, pool, params, cand)(s)


def dialectical_update(s: np.ndarray, a: np.ndarray) -> np.ndarray:
    return s * a


def run_phase2(s0: np.ndarray, cand: Skeleton, pool: CiPool, params: QacdParams,
               keep_snapshots: bool = False, t_max: int | None = None) -> tuple[np.ndarray, QacdTrace]:
    """Iterate the attenuation update from ``s0``.

    Stops once the max-norm change drops below ``epsilon`` or after ``t_max``
    updates (``params.t_max`` unless overridden).
    """
    t_max = params.t_max if t_max is None else t_max
    attenuate = _Attenuation(s0.shape[0], witness_triples(cand), pool, params, cand)
    trace = QacdTrace(snapshots=[s0.copy()] if keep_snapshots else None, candidate=cand)
    s = s0.copy()
    for _ in range(t_max):
        nxt = dialectical_update(s, attenuate(s))
        change = float(np.max(np.abs(nxt - s))) if s.size else 0.0
        s = nxt
        trace.max_change.append(change)
        if keep_snapshots:
            trace.snapshots.append(s.copy())
        if change < params.epsilon:
            trace.converged = True
            break
    trace.s_final = s
    return s, trace


def threshold_skeleton(s: np.ndarray, delta0: float) -> Skeleton:
    xs, ys = np.nonzero(np.triu(s >= delta0, k=1))
    return Skeleton(s.shape[0], frozenset(zip(xs.tolist(), ys.tolist())))


def orient(skel: Skeleton, pool: CiPool) -> Pdag:
    return orient_colliders(skel, pool.sepset)


def qacd_discover(provider: CiProvider, n_vars: int, params: QacdParams = QacdParams(),
                  keep_snapshots: bool = False) -> tuple[Pdag, QacdTrace]:
    cand, pool = phase1_candidates(provider, n_vars, params)
    s, trace = run_phase2(initial_acceptability(cand), cand, pool, params, keep_snapshots)
    return orient(threshold_skeleton(s, params.delta0), pool), trace
