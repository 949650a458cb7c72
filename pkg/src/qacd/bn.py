"""Discrete Bayesian networks: BIF ingestion, ancestral sampling, oracle CI."""

from __future__ import annotations

import csv
import itertools
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import Dag, GraphError, Pdag, cpdag_from_dag, d_separated

NORMALIZATION_TOLERANCE = 1e-6


class BifError(ValueError):
    pass


class BifSyntaxError(BifError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class BifSemanticError(BifError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise BifSemanticError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise BifSemanticError(f"variable {self.name!r} has duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional table ``P(child | parents)``.

    ``table`` has shape ``(*parent_cardinalities, child_cardinality)``;
    the parent-state combination is the leading index tuple.
    """

    child: int
    parents: tuple[int, ...]
    table: np.ndarray

    def row(self, parent_states: Sequence[int]) -> np.ndarray:
        return self.table[tuple(parent_states)]

    def flat(self) -> np.ndarray:
        """Rows as a 2-D array indexed by C-order parent configuration."""
        return self.table.reshape(-1, self.table.shape[-1])


@dataclass(frozen=True, eq=False)
class BayesNet:
    variables: tuple[Variable, ...]
    dag: Dag
    cpts: tuple[Cpt, ...]
    name: str = "unknown"

    def __post_init__(self):
        pa = self.dag.parent_lists()
        for i, cpt in enumerate(self.cpts):
            if cpt.child != i or sorted(cpt.parents) != pa[i]:
                raise BifSemanticError(f"CPT of {self.variables[i].name!r} does not match the graph")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def cardinalities(self) -> list[int]:
        return [v.cardinality for v in self.variables]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def n_parameters(self) -> int:
        return sum((v.cardinality - 1) * int(np.prod([self.variables[p].cardinality for p in c.parents]))
                   for v, c in zip(self.variables, self.cpts))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Categorical observations stored column-major, shape ``(n_vars, n_rows)``."""

    columns: np.ndarray
    cardinalities: tuple[int, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        cols = np.asarray(self.columns)
        if cols.ndim != 2 or cols.shape[0] != len(self.cardinalities):
            raise ValueError("columns must have shape (n_vars, n_rows)")
        if cols.size and (cols.min() < 0 or np.any(cols.max(axis=1) >= np.asarray(self.cardinalities))):
            raise ValueError("category index outside the variable's cardinality")
        object.__setattr__(self, "columns", cols)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"X{i}" for i in range(cols.shape[0])))

    @property
    def n_rows(self) -> int:
        return self.columns.shape[1]

    @property
    def n_vars(self) -> int:
        return self.columns.shape[0]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            w.writerows(self.columns.T.tolist())

    @classmethod
    def from_csv(cls, path: str | Path, cardinalities: Sequence[int] | None = None) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        names = tuple(rows[0])
        data = np.array(rows[1:], dtype=np.int64).reshape(-1, len(names)).T
        if cardinalities is None:
            cardinalities = [max(int(c.max()) + 1, 2) if c.size else 2 for c in data]
        return cls(np.ascontiguousarray(data), tuple(cardinalities), names)


# ---------------------------------------------------------------------------
# BIF parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<string>"[^"]*")
  | (?P<punct>[{}()\[\],;|])
  | (?P<word>[^\s{}()\[\],;|"]+)
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise BifSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "string":
            tokens.append(_Token("word", value[1:-1], line, pos - line_start + 1))
        elif kind in ("punct", "word"):
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        lines = text.splitlines() or [""]
        self._eof = (len(lines), len(lines[-1]) + 1)

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def error(self, msg: str, tok: _Token | None = None):
        tok = tok or self.peek()
        if tok is None:
            raise BifSyntaxError(msg + " (at end of input)", *self._eof)
        raise BifSyntaxError(msg, tok.line, tok.column)

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, value: str) -> _Token:
        tok = self.next()
        if tok.value != value:
            self.error(f"expected {value!r}, found {tok.value!r}", tok)
        return tok

    def word(self) -> str:
        tok = self.next()
        if tok.kind != "word":
            self.error(f"expected a name, found {tok.value!r}", tok)
        return tok.value

    def accept(self, value: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.value == value:
            self.i += 1
            return True
        return False

    def skip_statement(self):
        while not self.accept(";"):
            self.next()

    def number_list(self) -> list[float]:
        values = []
        while True:
            tok = self.next()
            if tok.value == ";":
                return values
            if tok.value == ",":
                continue
            try:
                values.append(float(tok.value))
            except ValueError:
                self.error(f"expected a probability, found {tok.value!r}", tok)

    def word_list(self, close: str) -> list[str]:
        items = []
        while not self.accept(close):
            if items:
                self.expect(",")
            items.append(self.word())
        return items

    def parse(self):
        name = "unknown"
        variables: dict[str, tuple[str, ...]] = {}
        probs: dict[str, tuple[list[str], list]] = {}
        while self.peek() is not None:
            tok = self.next()
            if tok.value == "network":
                name = self.word()
                self.expect("{")
                depth = 1
                while depth:
                    t = self.next()
                    depth += {"{": 1, "}": -1}.get(t.value, 0)
            elif tok.value == "variable":
                vname = self.word()
                if vname in variables:
                    raise BifSemanticError(f"variable {vname!r} declared twice")
                variables[vname] = self.variable_body(vname)
            elif tok.value == "probability":
                child, parents = self.probability_head()
                if child in probs:
                    raise BifSemanticError(f"second probability block for {child!r}")
                probs[child] = (parents, self.probability_body())
            else:
                self.error(f"unexpected token {tok.value!r}", tok)
        return name, variables, probs

    def variable_body(self, vname):
        self.expect("{")
        states = None
        while not self.accept("}"):
            tok = self.next()
            if tok.value == "type":
                kind = self.word()
                if kind != "discrete":
                    self.error(f"only discrete variables are supported, got {kind!r}", tok)
                self.expect("[")
                size_tok = self.next()
                self.expect("]")
                self.expect("{")
                states = tuple(self.word_list("}"))
                self.expect(";")
                try:
                    size = int(size_tok.value)
                except ValueError:
                    self.error("state count must be an integer", size_tok)
                if size != len(states):
                    raise BifSemanticError(
                        f"variable {vname!r} declares {size} states but lists {len(states)}")
            elif tok.value == "property":
                self.skip_statement()
            else:
                self.error(f"unexpected token {tok.value!r} in variable block", tok)
        if states is None:
            raise BifSemanticError(f"variable {vname!r} has no type declaration")
        return states

    def probability_head(self):
        self.expect("(")
        child = self.word()
        parents = []
        if self.accept("|"):
            parents = self.word_list(")")
        else:
            self.expect(")")
        return child, parents

    def probability_body(self):
        self.expect("{")
        entries = []
        while not self.accept("}"):
            tok = self.peek()
            if tok.value == "table":
                self.next()
                entries.append(("table", None, self.number_list(), tok))
            elif tok.value == "default":
                self.next()
                entries.append(("default", None, self.number_list(), tok))
            elif tok.value == "property":
                self.next()
                self.skip_statement()
            elif tok.value == "(":
                self.next()
                entries.append(("row", self.word_list(")"), self.number_list(), tok))
            else:
                self.error(f"unexpected token {tok.value!r} in probability block")
        return entries


def _normalized(values: list[float], where: str) -> np.ndarray:
    row = np.asarray(values, dtype=float)
    if np.any(row < 0):
        raise BifSemanticError(f"negative probability in {where}")
    total = row.sum()
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise BifSemanticError(f"probabilities in {where} sum to {total:.6g}, not 1")
    return row / total


def parse_bif(text: str) -> BayesNet:
    """Parse a BIF 0.3 document into a validated :class:`BayesNet`.

    Variable order is declaration order.  A ``table`` entry of a conditional
    block lists values with the child state varying slowest and the last
    parent varying fastest.
    """
    name, var_states, probs = _Parser(text).parse()
    names = list(var_states)
    index = {v: i for i, v in enumerate(names)}
    variables = tuple(Variable(v, var_states[v]) for v in names)
    for child in probs:
        if child not in index:
            raise BifSemanticError(f"probability block for unknown variable {child!r}")
    edges = set()
    cpts = []
    for i, vname in enumerate(names):
        if vname not in probs:
            raise BifSemanticError(f"no probability block for {vname!r}")
        parent_names, entries = probs[vname]
        for p in parent_names:
            if p not in index:
                raise BifSemanticError(f"unknown parent {p!r} of {vname!r}")
            if p == vname:
                raise BifSemanticError(f"{vname!r} lists itself as a parent")
        if len(set(parent_names)) != len(parent_names):
            raise BifSemanticError(f"duplicate parent of {vname!r}")
        parents = [index[p] for p in parent_names]
        edges.update((p, i) for p in parents)
        cpts.append(_build_table(i, vname, parents, entries, variables))

    try:
        dag = Dag(len(names), frozenset(edges))
    except GraphError as exc:
        raise BifSemanticError(f"network structure is invalid: {exc}") from None
    # store parents sorted by index so the CPT matches the DAG's parent order
    cpts = [_sort_parents(c) for c in cpts]
    return BayesNet(variables, dag, tuple(cpts), name)


def _build_table(i, vname, parents, entries, variables) -> Cpt:
    card = variables[i].cardinality
    pcards = [variables[p].cardinality for p in parents]
    table = np.full((*pcards, card), np.nan)
    filled = np.zeros(pcards, dtype=bool)
    default = None
    for kind, labels, values, tok in entries:
        where = f"probability block of {vname!r} (line {tok.line})"
        if kind == "table":
            n_cfg = int(np.prod(pcards)) if pcards else 1
            if len(values) != card * n_cfg:
                raise BifSemanticError(f"{where}: table has {len(values)} values, expected {card * n_cfg}")
            arr = np.asarray(values, dtype=float).reshape(card, n_cfg).T
            for cfg, row in zip(itertools.product(*[range(c) for c in pcards]), arr):
                table[cfg] = _normalized(list(row), where)
            filled[...] = True
        elif kind == "default":
            if len(values) != card:
                raise BifSemanticError(f"{where}: default row has {len(values)} values, expected {card}")
            default = _normalized(values, where)
        else:
            if len(labels) != len(parents):
                raise BifSemanticError(
                    f"{where}: row names {len(labels)} parent states, expected {len(parents)}")
            if len(values) != card:
                raise BifSemanticError(f"{where}: row has {len(values)} values, expected {card}")
            cfg = []
            for lab, p in zip(labels, parents):
                states = variables[p].states
                if lab not in states:
                    raise BifSemanticError(f"{where}: unknown state {lab!r} of {variables[p].name!r}")
                cfg.append(states.index(lab))
            cfg = tuple(cfg)
            if filled[cfg]:
                raise BifSemanticError(f"{where}: parent configuration {labels} given twice")
            table[cfg] = _normalized(values, where)
            filled[cfg] = True
    if not filled.all():
        if default is None:
            raise BifSemanticError(f"probability block of {vname!r} does not cover every parent configuration")
        table[~filled] = default
    return Cpt(i, tuple(parents), table)


def _sort_parents(cpt: Cpt) -> Cpt:
    order = sorted(range(len(cpt.parents)), key=lambda k: cpt.parents[k])
    if order == list(range(len(order))):
        return cpt
    table = np.transpose(cpt.table, (*order, len(order)))
    return Cpt(cpt.child, tuple(cpt.parents[k] for k in order), np.ascontiguousarray(table))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_bif(net: BayesNet) -> str:
    """Serialize to BIF using explicit per-configuration rows."""
    out = [f"network {net.name} {{", "}"]
    for v in net.variables:
        out.append(f"variable {v.name} {{")
        out.append(f"  type discrete [ {v.cardinality} ] {{ {', '.join(v.states)} }};")
        out.append("}")
    for v, cpt in zip(net.variables, net.cpts):
        if not cpt.parents:
            out.append(f"probability ( {v.name} ) {{")
            out.append(f"  table {', '.join(_fmt(x) for x in cpt.table)};")
        else:
            pnames = ", ".join(net.variables[p].name for p in cpt.parents)
            out.append(f"probability ( {v.name} | {pnames} ) {{")
            pcards = cpt.table.shape[:-1]
            for cfg in itertools.product(*[range(c) for c in pcards]):
                labels = ", ".join(net.variables[p].states[s] for p, s in zip(cpt.parents, cfg))
                out.append(f"  ({labels}) {', '.join(_fmt(x) for x in cpt.table[cfg])};")
        out.append("}")
    return "\n".join(out) + "\n"


def read_bif(path: str | Path) -> BayesNet:
    path = Path(path)
    net = parse_bif(path.read_text())
    if net.name == "unknown":
        net = BayesNet(net.variables, net.dag, net.cpts, path.stem.split(".")[0])
    return net


BUNDLED_NETWORKS = ("earthquake", "survey", "asia", "child", "insurance", "water", "hailfinder", "win95pts")


def load_network(name_or_path: str | Path) -> BayesNet:
    """Load a BIF file, or one of the bundled bnlearn networks by name."""
    p = Path(name_or_path)
    if p.exists():
        return read_bif(p)
    key = str(name_or_path).lower()
    if key in BUNDLED_NETWORKS:
        text = resources.files("qacd.data.networks").joinpath(f"{key}.bif").read_text()
        net = parse_bif(text)
        return BayesNet(net.variables, net.dag, net.cpts, key)
    raise FileNotFoundError(f"no BIF file or bundled network named {name_or_path!r}")


# ---------------------------------------------------------------------------
# sampling and ground truth


def forward_sample(net: BayesNet, n: int, seed: int) -> Dataset:
    """Ancestral sampling in topological order with inverse-CDF draws.

    Uses a Philox counter-based generator so draws are reproducible across
    platforms for a given seed.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    cols = np.zeros((net.n, n), dtype=np.int64)
    for v in net.dag.topological_order():
        cpt = net.cpts[v]
        rows = cpt.flat()
        if cpt.parents:
            pcards = cpt.table.shape[:-1]
            cfg = np.ravel_multi_index(tuple(cols[p] for p in cpt.parents), pcards)
        else:
            cfg = np.zeros(n, dtype=np.int64)
        cdf = np.cumsum(rows, axis=1)
        u = rng.random(n)
        state = (u[:, None] >= cdf[cfg]).sum(axis=1)
        cols[v] = np.minimum(state, rows.shape[1] - 1)
    return Dataset(cols, tuple(net.cardinalities), tuple(net.names))


def oracle_ci(net: BayesNet, x: int, y: int, z: Iterable[int] = ()) -> float:
    """1.0 when ``x`` and ``y`` are d-separated by ``z`` in the network, else 0.0."""
    return 1.0 if d_separated(net.dag, x, y, z) else 0.0


def true_cpdag(net: BayesNet) -> Pdag:
    return cpdag_from_dag(net.dag)
