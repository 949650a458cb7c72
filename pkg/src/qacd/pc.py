"""PC-stable baseline sharing the CI provider and orientation code."""

from __future__ import annotations

import itertools

from .ci import CiProvider
from .graph import Pdag, Skeleton, orient_colliders


class SepsetMap(dict):
    """Unordered pair -> separating set that justified removing the edge."""

    def __getitem__(self, pair):
        x, y = pair
        return super().__getitem__((x, y) if x < y else (y, x))

    def __setitem__(self, pair, z):
        x, y = pair
        super().__setitem__((x, y) if x < y else (y, x), tuple(sorted(z)))

    def __contains__(self, pair):
        x, y = pair
        return super().__contains__((x, y) if x < y else (y, x))

    def lookup(self, x: int, y: int) -> tuple[int, ...]:
        return self[x, y]


def pc_stable_skeleton(provider: CiProvider, n_vars: int, alpha: float = 0.05,
                       max_k: int | None = None) -> tuple[Skeleton, SepsetMap]:
    """Order-independent skeleton search (Colombo & Maathuis style).

    At each level the adjacency sets are frozen before any test runs;
    conditioning sets come from the frozen neighbourhood of the first
    endpoint, then of the second.
    """
    if max_k is None:
        max_k = max(n_vars - 2, 0)
    adj = [set(range(n_vars)) - {i} for i in range(n_vars)]
    sepsets = SepsetMap()
    level = 0
    while level <= max_k and any(len(a) >= level + 1 for a in adj):
        frozen = [frozenset(a) for a in adj]
        for x, y in itertools.combinations(range(n_vars), 2):
            if y not in adj[x]:
                continue
            for a, b in ((x, y), (y, x)):
                pool = sorted(frozen[a] - {b})
                if len(pool) < level:
                    continue
                for z in itertools.combinations(pool, level):
                    if provider.test(x, y, z).p_value >= alpha:
                        adj[x].discard(y)
                        adj[y].discard(x)
                        sepsets[x, y] = z
                        break
                if y not in adj[x]:
                    break
        level += 1
    edges = frozenset((i, j) for i in range(n_vars) for j in adj[i] if i < j)
    return Skeleton(n_vars, edges), sepsets


def pc_orient(skel: Skeleton, sepsets: SepsetMap) -> Pdag:
    return orient_colliders(skel, sepsets.lookup)


def pc_stable(provider: CiProvider, n_vars: int, alpha: float = 0.05, max_k: int | None = None) -> Pdag:
    skel, sepsets = pc_stable_skeleton(provider, n_vars, alpha, max_k)
    return pc_orient(skel, sepsets)
