"""Graph types and graphical algorithms over integer-indexed variables.

Nodes are plain ints ``0..n-1``.  A :class:`Pdag` stores an undirected
edge ``i - j`` as the two arcs ``(i, j)`` and ``(j, i)`` and a directed edge
``i -> j`` as the single arc ``(i, j)``, so one type covers skeletons,
partially directed graphs and CPDAGs.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


class GraphError(ValueError):
    pass


class InconsistentGraphError(GraphError):
    """An orientation step tried to reverse a strictly directed arc."""


class CapExceededError(GraphError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"more than {cap} consistent extensions")


class NoExtensionError(GraphError):
    pass


def _check_nodes(n: int, nodes: Iterable[int]) -> None:
    for v in nodes:
        if not 0 <= v < n:
            raise GraphError(f"node index {v} out of range for {n} variables")


def _canonical(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


def _has_cycle(n: int, arcs: Iterable[Edge]) -> bool:
    children: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for u, v in arcs:
        children[u].append(v)
        indeg[v] += 1
    queue = deque(v for v in range(n) if indeg[v] == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen != n


@dataclass(frozen=True)
class Skeleton:
    n: int
    edges: frozenset[Edge] = frozenset()

    def __post_init__(self):
        edges = set()
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            edges.add(_canonical(i, j))
        _check_nodes(self.n, itertools.chain.from_iterable(edges))
        object.__setattr__(self, "edges", frozenset(edges))

    def adjacent(self, i: int, j: int) -> bool:
        return _canonical(i, j) in self.edges

    def neighbors(self, i: int) -> set[int]:
        out = set()
        for a, b in self.edges:
            if a == i:
                out.add(b)
            elif b == i:
                out.add(a)
        return out

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class Dag:
    n: int
    edges: frozenset[Edge] = frozenset()

    def __post_init__(self):
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop on node {u}")
        _check_nodes(self.n, itertools.chain.from_iterable(edges))
        if _has_cycle(self.n, edges):
            raise GraphError("edge set contains a directed cycle")
        object.__setattr__(self, "edges", edges)

    def parents(self, i: int) -> set[int]:
        return {u for u, v in self.edges if v == i}

    def children(self, i: int) -> set[int]:
        return {v for u, v in self.edges if u == i}

    def parent_lists(self) -> list[list[int]]:
        pa: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            pa[v].append(u)
        return pa

    def child_lists(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            ch[u].append(v)
        return ch

    def topological_order(self) -> list[int]:
        """Kahn's algorithm, smallest available index first."""
        import heapq

        ch = self.child_lists()
        indeg = [0] * self.n
        for _, v in self.edges:
            indeg[v] += 1
        heap = [v for v in range(self.n) if indeg[v] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            u = heapq.heappop(heap)
            order.append(u)
            for v in ch[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(heap, v)
        return order

    def skeleton(self) -> Skeleton:
        return Skeleton(self.n, frozenset(self.edges))

    def to_pdag(self) -> "Pdag":
        return Pdag(self.n, self.edges)


@dataclass(frozen=True)
class Pdag:
    n: int
    arcs: frozenset[Edge] = frozenset()
    _succ: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        arcs = frozenset((int(u), int(v)) for u, v in self.arcs)
        for u, v in arcs:
            if u == v:
                raise GraphError(f"self-loop on node {u}")
        _check_nodes(self.n, itertools.chain.from_iterable(arcs))
        object.__setattr__(self, "arcs", arcs)
        succ: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in arcs:
            succ[u].add(v)
        object.__setattr__(self, "_succ", tuple(frozenset(s) for s in succ))

    @classmethod
    def from_skeleton(cls, skel: Skeleton) -> "Pdag":
        arcs = set()
        for a, b in skel.edges:
            arcs.add((a, b))
            arcs.add((b, a))
        return cls(skel.n, frozenset(arcs))

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._succ[i] or i in self._succ[j]

    def is_directed(self, i: int, j: int) -> bool:
        """True for a strictly directed arc ``i -> j``."""
        return j in self._succ[i] and i not in self._succ[j]

    def is_undirected(self, i: int, j: int) -> bool:
        return j in self._succ[i] and i in self._succ[j]

    def directed_arcs(self) -> list[Edge]:
        return sorted((u, v) for u, v in self.arcs if (v, u) not in self.arcs)

    def undirected_edges(self) -> list[Edge]:
        return sorted((u, v) for u, v in self.arcs if u < v and (v, u) in self.arcs)

    def skeleton(self) -> Skeleton:
        return Skeleton(self.n, frozenset(self.arcs))

    def is_dag(self) -> bool:
        return not self.undirected_edges() and not _has_cycle(self.n, self.arcs)

    def to_dag(self) -> Dag:
        if self.undirected_edges():
            raise GraphError("graph has undirected edges")
        return Dag(self.n, self.arcs)

    def dump(self, names: list[str] | None = None) -> str:
        """Plain-text adjacency listing, one edge per line, ordered by index."""
        label = (lambda i: names[i]) if names else str
        lines = []
        for a, b in sorted({_canonical(u, v) for u, v in self.arcs}):
            if self.is_undirected(a, b):
                lines.append(f"{label(a)} -- {label(b)}")
            elif self.is_directed(a, b):
                lines.append(f"{label(a)} -> {label(b)}")
            else:
                lines.append(f"{label(b)} -> {label(a)}")
        return "\n".join(lines)


def parse_dump(text: str, n: int) -> Pdag:
    """Inverse of :meth:`Pdag.dump` for the integer-labelled form."""
    arcs = set()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if " -- " in line:
            a, b = (int(t) for t in line.split(" -- "))
            arcs.update({(a, b), (b, a)})
        elif " -> " in line:
            a, b = (int(t) for t in line.split(" -> "))
            arcs.add((a, b))
        else:
            raise GraphError(f"cannot parse edge line {line!r}")
    return Pdag(n, frozenset(arcs))


# ---------------------------------------------------------------------------
# reachability and d-separation


def descendants(g: Dag, x: int) -> set[int]:
    _check_nodes(g.n, [x])
    ch = g.child_lists()
    seen: set[int] = set()
    stack = [x]
    while stack:
        u = stack.pop()
        for v in ch[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def ancestors(g: Dag, nodes: Iterable[int]) -> set[int]:
    """Ancestors of ``nodes``, including the nodes themselves."""
    pa = g.parent_lists()
    seen = set(nodes)
    stack = list(seen)
    while stack:
        u = stack.pop()
        for v in pa[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def d_separated(g: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """Bayes-ball reachability test for ``x _||_ y | z`` in ``g``."""
    z = set(z)
    _check_nodes(g.n, [x, y, *z])
    if x == y:
        raise GraphError("x and y must differ")
    if x in z or y in z:
        raise GraphError("conditioning set must exclude x and y")
    return bayes_ball(g.parent_lists(), g.child_lists(), x, y, z)


def bayes_ball(pa: list[list[int]], ch: list[list[int]], x: int, y: int, z: set[int]) -> bool:
    """d-separation on raw parent/child lists; no argument checking."""
    anc_z = set(z)
    stack = list(z)
    while stack:
        for p in pa[stack.pop()]:
            if p not in anc_z:
                anc_z.add(p)
                stack.append(p)

    # direction flag: True = arrived from a child (moving up), False = from a parent
    visited: set[tuple[int, bool]] = set()
    queue = deque([(x, True)])
    while queue:
        node, up = queue.popleft()
        if (node, up) in visited:
            continue
        visited.add((node, up))
        if node == y:
            return False
        if up:
            if node not in z:
                queue.extend((p, True) for p in pa[node])
                queue.extend((c, False) for c in ch[node])
        else:
            if node not in z:
                queue.extend((c, False) for c in ch[node])
            if node in anc_z:
                queue.extend((p, True) for p in pa[node])
    return True


# ---------------------------------------------------------------------------
# orientation


def unshielded_triples(s: Skeleton) -> list[tuple[int, int, int]]:
    """All ``(x, w, y)`` with ``x - w - y`` and ``x``, ``y`` nonadjacent, ``x < y``."""
    adj = s.adjacency()
    out = []
    for w in range(s.n):
        for x, y in itertools.combinations(sorted(adj[w]), 2):
            if y not in adj[x]:
                out.append((x, w, y))
    out.sort()
    return out


def v_structures(g: Dag | Pdag) -> set[tuple[int, int, int]]:
    """Colliders ``x -> w <- y`` (strictly directed) with nonadjacent ``x < y``."""
    p = g.to_pdag() if isinstance(g, Dag) else g
    pa: list[list[int]] = [[] for _ in range(p.n)]
    for u, v in p.directed_arcs():
        pa[v].append(u)
    out = set()
    for w in range(p.n):
        for x, y in itertools.combinations(sorted(pa[w]), 2):
            if not p.adjacent(x, y):
                out.add((x, w, y))
    return out


class _MixedGraph:
    """Mutable working copy used while closing orientation rules."""

    def __init__(self, g: Pdag):
        self.n = g.n
        self.succ = [set(s) for s in g._succ]

    def adjacent(self, a, b):
        return b in self.succ[a] or a in self.succ[b]

    def directed(self, a, b):
        return b in self.succ[a] and a not in self.succ[b]

    def undirected(self, a, b):
        return b in self.succ[a] and a in self.succ[b]

    def orient(self, a, b):
        if self.directed(b, a):
            raise InconsistentGraphError(f"cannot orient {a}->{b}: {b}->{a} already directed")
        self.succ[b].discard(a)
        self.succ[a].add(b)

    def to_pdag(self) -> Pdag:
        return Pdag(self.n, frozenset((u, v) for u in range(self.n) for v in self.succ[u]))


def _rule1(g: _MixedGraph, a: int, b: int) -> bool:
    # c -> a, a - b, c not adjacent b
    return any(g.directed(c, a) and c != b and not g.adjacent(c, b) for c in range(g.n))


def _rule2(g: _MixedGraph, a: int, b: int) -> bool:
    # a -> c -> b
    return any(g.directed(a, c) and g.directed(c, b) for c in range(g.n))


def _rule3(g: _MixedGraph, a: int, b: int) -> bool:
    # a - c, a - d, c -> b, d -> b, c and d nonadjacent
    cands = [c for c in range(g.n) if g.undirected(a, c) and g.directed(c, b)]
    return any(not g.adjacent(c, d) for c, d in itertools.combinations(cands, 2))


def _rule4(g: _MixedGraph, a: int, b: int) -> bool:
    # a - c, c -> d, d -> b, c and b nonadjacent
    for c in range(g.n):
        if c == b or not g.undirected(a, c) or g.adjacent(c, b):
            continue
        if any(g.directed(c, d) and g.directed(d, b) for d in range(g.n)):
            return True
    return False


_RULES = (_rule1, _rule2, _rule3, _rule4)


def meek_closure(g: Pdag) -> Pdag:
    """Apply orientation rules R1-R4 until none fires.

    Rules are scanned in order R1..R4 over undirected edges in canonical
    index order; for an edge ``i - j`` the orientation ``i -> j`` is tried
    before ``j -> i``.
    """
    work = _MixedGraph(g)
    changed = True
    while changed:
        changed = False
        for rule in _RULES:
            for i in range(work.n):
                for j in sorted(work.succ[i]):
                    if j <= i or not work.undirected(i, j):
                        continue
                    if rule(work, i, j):
                        work.orient(i, j)
                        changed = True
                    elif rule(work, j, i):
                        work.orient(j, i)
                        changed = True
    return work.to_pdag()


def orient_colliders(skel: Skeleton, separated_by: Callable[[int, int], Iterable[int]]) -> Pdag:
    """Orient ``x -> w <- y`` for every unshielded triple with ``w`` outside
    the separating set of ``(x, y)``, then close under the Meek rules.

    Triples are processed in canonical order.  An arc that would reverse an
    already placed directed arc is skipped and logged.
    """
    g = _MixedGraph(Pdag.from_skeleton(skel))
    for x, w, y in unshielded_triples(skel):
        if w in set(separated_by(x, y)):
            continue
        for tail in (x, y):
            if g.directed(w, tail):
                logger.info("collider conflict: keeping %d->%d, skipping %d->%d", w, tail, tail, w)
            elif g.undirected(tail, w):
                g.orient(tail, w)
    return meek_closure(g.to_pdag())


def cpdag_from_dag(g: Dag) -> Pdag:
    """CPDAG of the Markov equivalence class of ``g``."""
    skel = g.skeleton()
    arcs = set()
    vs = v_structures(g)
    compelled = set()
    for x, w, y in vs:
        compelled.add((x, w))
        compelled.add((y, w))
    for a, b in skel.edges:
        if (a, b) in compelled:
            arcs.add((a, b))
        elif (b, a) in compelled:
            arcs.add((b, a))
        else:
            arcs.update({(a, b), (b, a)})
    return meek_closure(Pdag(g.n, frozenset(arcs)))


def consistent_extensions(g: Pdag, cap: int = 100_000) -> list[Dag]:
    """Every DAG obtained by orienting the undirected edges of ``g`` without
    creating a directed cycle or a v-structure that ``g`` does not have.

    Raises :class:`CapExceededError` once more than ``cap`` are found and
    :class:`NoExtensionError` when there are none.
    """
    n = g.n
    directed = g.directed_arcs()
    undirected = g.undirected_edges()
    if _has_cycle(n, directed):
        raise NoExtensionError("directed part of the graph is cyclic")

    succ: list[set[int]] = [set() for _ in range(n)]
    pred: list[set[int]] = [set() for _ in range(n)]
    fixed = set(directed)
    for u, v in directed:
        succ[u].add(v)
        pred[v].add(u)
    adjacent = g.adjacent
    results: list[Dag] = []

    def reaches(src, dst):
        stack, seen = [src], {src}
        while stack:
            u = stack.pop()
            if u == dst:
                return True
            for v in succ[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False

    def creates_new_collider(u, v):
        # adding u -> v; any other parent c of v nonadjacent to u makes a
        # collider u -> v <- c, which is new because u -> v was not fixed
        return any(c != u and not adjacent(c, u) for c in pred[v])

    def backtrack(k):
        if k == len(undirected):
            results.append(Dag(n, frozenset(fixed | _chosen)))
            if len(results) > cap:
                raise CapExceededError(cap)
            return
        a, b = undirected[k]
        for u, v in ((a, b), (b, a)):
            if creates_new_collider(u, v) or reaches(v, u):
                continue
            succ[u].add(v)
            pred[v].add(u)
            _chosen.add((u, v))
            backtrack(k + 1)
            _chosen.discard((u, v))
            succ[u].discard(v)
            pred[v].discard(u)

    _chosen: set[Edge] = set()
    backtrack(0)
    if not results:
        raise NoExtensionError("no consistent DAG extension")
    return results
