"""Skeleton F1, structural Hamming distance and structural intervention distance."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .graph import Dag, Pdag, Skeleton, bayes_ball, consistent_extensions, descendants


@dataclass(frozen=True)
class SkeletonReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    undefined: bool = False  # both graphs empty: f1 taken as 0 by convention


@dataclass(frozen=True)
class SidBounds:
    low: int
    high: int
    extensions_used: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError("low bound exceeds high bound")


def skeleton_f1(est: Skeleton, truth: Skeleton) -> SkeletonReport:
    if est.n != truth.n:
        raise ValueError("graphs have different variable counts")
    tp = len(est.edges & truth.edges)
    fp = len(est.edges - truth.edges)
    fn = len(truth.edges - est.edges)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SkeletonReport(precision, recall, f1, tp, fp, fn, undefined=(tp + fp + fn == 0))


def _mark(g: Pdag, i: int, j: int) -> int:
    # 0 absent, 1 undirected, 2 i->j, 3 j->i
    a, b = (i, j) in g.arcs, (j, i) in g.arcs
    if a and b:
        return 1
    if a:
        return 2
    if b:
        return 3
    return 0


def shd(est: Pdag, truth: Pdag) -> int:
    """Number of unordered pairs whose edge mark differs; a reversal costs 1."""
    if est.n != truth.n:
        raise ValueError("graphs have different variable counts")
    pairs = {(min(u, v), max(u, v)) for u, v in est.arcs | truth.arcs}
    return sum(_mark(est, i, j) != _mark(truth, i, j) for i, j in pairs)


def nshd(est: Pdag, truth: Pdag, n_true_edges: int) -> float:
    if n_true_edges <= 0:
        raise ValueError("normalization needs at least one true edge")
    return shd(est, truth) / n_true_edges


def sid_dag(est: Dag, truth: Dag) -> int:
    """Structural intervention distance of ``est`` from ``truth``.

    Counts ordered pairs ``(i, j)`` where adjusting for the parents of ``i``
    in ``est`` does not give the correct interventional distribution of
    ``j`` under ``do(i)`` in ``truth``.
    """
    if est.n != truth.n:
        raise ValueError("graphs have different variable counts")
    n = truth.n
    desc = [descendants(truth, i) for i in range(n)]
    pa_t = truth.parent_lists()
    ch_t = truth.child_lists()
    pa_e = est.parent_lists()
    wrong = 0
    for i in range(n):
        z = set(pa_e[i])
        for j in range(n):
            if j == i:
                continue
            if j in z:
                wrong += j in desc[i]
                continue
            # nodes other than i on a directed path i -> ... -> j
            on_path = {w for w in desc[i] if w == j or j in desc[w]}
            forbidden = set(on_path)
            for w in on_path:
                forbidden |= desc[w]
            if z & forbidden:
                wrong += 1
                continue
            if on_path:
                # proper back-door graph: drop the first edge of every causal path
                ch = [list(c) for c in ch_t]
                ch[i] = [c for c in ch_t[i] if c not in on_path]
                pa = [[p for p in ps if not (p == i and v in on_path)] for v, ps in enumerate(pa_t)]
            else:
                pa, ch = pa_t, ch_t
            if not bayes_ball(pa, ch, i, j, z):
                wrong += 1
    return wrong


def sid_bounds(est: Pdag, truth: Dag, cap: int = 100_000) -> SidBounds:
    """Min and max SID over the consistent DAG extensions of ``est``."""
    exts = consistent_extensions(est, cap)
    values = [sid_dag(d, truth) for d in exts]
    return SidBounds(min(values), max(values), len(exts))


def nsid(bounds: SidBounds, n_true_edges: int) -> tuple[float, float]:
    if n_true_edges <= 0:
        raise ValueError("normalization needs at least one true edge")
    return bounds.low / n_true_edges, bounds.high / n_true_edges


@dataclass
class MetricReport:
    precision: float
    recall: float
    f1: float
    shd: int
    nshd: float
    sid_low: int | None = None
    sid_high: int | None = None
    nsid_low: float | None = None
    nsid_high: float | None = None
    sid_computed: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(est: Pdag, truth: Dag, truth_cpdag: Pdag, compute_sid: bool = True,
             sid_cap: int = 100_000) -> MetricReport:
    """All metrics of an estimated CPDAG against the generating DAG.

    SHD compares against the true CPDAG; SID against the true DAG.  When the
    extension enumeration fails (cap exceeded or no consistent extension) the
    SID fields stay empty and ``sid_computed`` is False.
    """
    from .graph import GraphError

    n_true = len(truth.edges)
    rep = skeleton_f1(est.skeleton(), truth.skeleton())
    out = MetricReport(rep.precision, rep.recall, rep.f1, shd(est, truth_cpdag), nshd(est, truth_cpdag, n_true))
    if compute_sid:
        try:
            b = sid_bounds(est, truth, sid_cap)
        except GraphError:
            return out
        out.sid_low, out.sid_high = b.low, b.high
        out.nsid_low, out.nsid_high = nsid(b, n_true)
        out.sid_computed = True
    return out
