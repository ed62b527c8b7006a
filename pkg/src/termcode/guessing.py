"""Guessing games with sources and labels: strategies, winning-configuration
counting, exhaustive maximisation, products, and the five-cycle construction.

A strategy gives each non-source vertex a total local function of its
in-neighbours' values; a configuration wins when every such vertex's value
agrees with its rule.  In the labelled game, configurations assign values to
labels instead of vertices, so several vertices can share one value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .depgraph import DepDigraph, LabelledDepGraph
from .normalize import DiversifiedInstance, NormalFormInstance, is_fnf
from .terms import (
    MAX_ENUMERATION,
    BudgetError,
    Interpretation,
    InvalidInstanceError,
    assignment_columns,
)

__all__ = [
    "Strategy",
    "GuessingResult",
    "count_winning",
    "count_winning_labelled",
    "max_winning_exhaustive",
    "product_strategy",
    "c5_strategy",
    "strategy_from_interpretation",
    "strategy_space",
    "parse_strategy",
    "format_strategy",
]

DEFAULT_STRATEGY_BUDGET = 1 << 40


@dataclass(frozen=True)
class Strategy:
    """Per non-source vertex, a flat table over its sorted in-neighbour list
    (row-major, last in-neighbour fastest)."""

    alphabet_size: int
    tables: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_name", dict(self.tables))

    def table(self, vertex: str) -> tuple[int, ...]:
        return self._by_name[vertex]

    @property
    def vertex_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.tables)


@dataclass(frozen=True)
class GuessingResult:
    count: int
    n: int
    gn_at_n: float | None
    optimal_strategy: Strategy | None

    @staticmethod
    def from_count(count: int, n: int, strategy: Strategy | None = None) -> "GuessingResult":
        gn = math.log(count) / math.log(n) if n >= 2 and count > 0 else None
        return GuessingResult(count, n, gn, strategy)


def _rule_vertices(graph: DepDigraph | LabelledDepGraph) -> tuple[int, ...]:
    total = len(graph.vertices if isinstance(graph, DepDigraph) else graph.vertex_names)
    return tuple(v for v in range(total) if v not in graph.sources)


def _vertex_names(graph: DepDigraph | LabelledDepGraph) -> tuple[str, ...]:
    return graph.vertices if isinstance(graph, DepDigraph) else graph.vertex_names


def _config_arity(graph: DepDigraph | LabelledDepGraph) -> int:
    """Number of independent values in a configuration (vertices or labels)."""
    if isinstance(graph, DepDigraph):
        return len(graph.vertices)
    return len(graph.label_names)


def _value_slot(graph: DepDigraph | LabelledDepGraph, vertex: int) -> int:
    """Configuration coordinate carrying the vertex's value."""
    if isinstance(graph, DepDigraph):
        return vertex
    return graph.labels[vertex]


def _check_strategy(graph: DepDigraph | LabelledDepGraph, strat: Strategy) -> dict[int, np.ndarray]:
    names = _vertex_names(graph)
    rules = _rule_vertices(graph)
    if set(strat.vertex_names) != {names[v] for v in rules}:
        raise InvalidInstanceError("strategy vertices do not match the graph's non-sources")
    n = strat.alphabet_size
    tables = {}
    for v in rules:
        table = strat.table(names[v])
        indeg = len(graph.in_neighbours(v))
        if len(table) != n**indeg:
            raise InvalidInstanceError(f"table for {names[v]!r} has wrong size")
        if any(not 0 <= val < n for val in table):
            raise InvalidInstanceError(f"table entry out of range for {names[v]!r}")
        tables[v] = np.asarray(table, dtype=np.int64)
    return tables


def _count_common(graph, strat: Strategy, chunk: int = 1 << 20) -> int:
    tables = _check_strategy(graph, strat)
    n = strat.alphabet_size
    arity = _config_arity(graph)
    space = n**arity
    if space > MAX_ENUMERATION:
        raise InvalidInstanceError(f"configuration space {n}^{arity} too large")
    count = 0
    for lo in range(0, space, chunk):
        hi = min(lo + chunk, space)
        cols = assignment_columns(n, arity, lo, hi)
        ok = np.ones(hi - lo, dtype=bool)
        for v, table in tables.items():
            idx = np.zeros(hi - lo, dtype=np.int64)
            for u in graph.in_neighbours(v):
                idx = idx * n + cols[_value_slot(graph, u)]
            ok &= table[idx] == cols[_value_slot(graph, v)]
        count += int(np.count_nonzero(ok))
    return count


def count_winning(graph: DepDigraph, strat: Strategy) -> int:
    """Number of configurations winning at every non-source vertex."""
    return _count_common(graph, strat)


def count_winning_labelled(graph: LabelledDepGraph, strat: Strategy) -> int:
    """Number of label assignments winning at every equation vertex."""
    return _count_common(graph, strat)


def strategy_space(graph: DepDigraph | LabelledDepGraph, n: int) -> int:
    """Number of strategies on the graph over an n-element alphabet."""
    total = 1
    for v in _rule_vertices(graph):
        total *= n ** (n ** len(graph.in_neighbours(v)))
    return total


def _rule_masks(graph, n: int) -> tuple[tuple[int, ...], list[list[int]], int]:
    """For each rule vertex, the winning-configuration bitmask of each of its
    possible tables, bit c = configuration index c."""
    arity = _config_arity(graph)
    space = n**arity
    cols = assignment_columns(n, arity, 0, space)
    rules = _rule_vertices(graph)
    masks: list[list[int]] = []
    for v in rules:
        nbrs = graph.in_neighbours(v)
        idx = np.zeros(space, dtype=np.int64)
        for u in nbrs:
            idx = idx * n + cols[_value_slot(graph, u)]
        val = cols[_value_slot(graph, v)]
        table_len = n ** len(nbrs)
        # bucket[e][w]: configurations requiring entry e to equal w
        buckets = [[0] * n for _ in range(table_len)]
        for c in range(space):
            buckets[int(idx[c])][int(val[c])] |= 1 << c
        per_table = []
        for t in range(n**table_len):
            digits = _table_digits(t, n, table_len)
            mask = 0
            for e, w in enumerate(digits):
                mask |= buckets[e][w]
            per_table.append(mask)
        masks.append(per_table)
    return rules, masks, space


def _table_digits(t: int, n: int, length: int) -> tuple[int, ...]:
    """Table index -> entries, odometer order (last entry fastest)."""
    digits = [0] * length
    for p in range(length - 1, -1, -1):
        digits[p] = t % n
        t //= n
    return tuple(digits)


def max_winning_exhaustive(
    graph: DepDigraph | LabelledDepGraph,
    n: int,
    labelled: bool | None = None,
    budget: int = DEFAULT_STRATEGY_BUDGET,
) -> GuessingResult:
    """Exact maximum winning count over all strategies, with witness.

    Strategies are enumerated vertex-major (ascending index), table entries as
    an odometer; ties keep the first optimum, so the witness is the
    lexicographically first optimal strategy.  Refuses to run when the
    strategy space exceeds the budget.
    """
    if labelled is not None and labelled != isinstance(graph, LabelledDepGraph):
        raise InvalidInstanceError("labelled flag does not match the graph type")
    total = strategy_space(graph, n)
    if total > budget:
        raise BudgetError(
            f"strategy space {total} exceeds budget {budget}; use heuristic search"
        )
    rules, masks, space = _rule_masks(graph, n)
    full = (1 << space) - 1
    names = _vertex_names(graph)

    best = -1
    best_choice: tuple[int, ...] | None = None
    levels = len(rules)
    choice = [0] * levels

    def rec(level: int, running: int):
        nonlocal best, best_choice
        if level == levels:
            count = running.bit_count()
            if count > best:
                best = count
                best_choice = tuple(choice)
            return
        for t, mask in enumerate(masks[level]):
            narrowed = running & mask
            if narrowed.bit_count() <= best:
                continue
            choice[level] = t
            rec(level + 1, narrowed)

    rec(0, full)
    assert best_choice is not None
    tables = []
    for pos, v in enumerate(rules):
        table_len = n ** len(graph.in_neighbours(v))
        tables.append((names[v], _table_digits(best_choice[pos], n, table_len)))
    witness = Strategy(n, tuple(tables))
    return GuessingResult.from_count(best, n, witness)


def _int_log(length: int, n: int) -> int | None:
    """Exact k with n**k == length, or None (also None when n == 1)."""
    if n <= 1:
        return None
    k = 0
    while n**k < length:
        k += 1
    return k if n**k == length else None


def product_strategy(s1: Strategy, s2: Strategy) -> Strategy:
    """Componentwise product on the alphabet {0..n1*n2-1}, pairing
    a = a1*n2 + a2.  Its winning count is the product of the factors'."""
    if s1.vertex_names != s2.vertex_names:
        raise InvalidInstanceError("strategies are defined on different graphs")
    n1, n2 = s1.alphabet_size, s2.alphabet_size
    n = n1 * n2
    tables = []
    for name, t1 in s1.tables:
        t2 = s2.table(name)
        deg1 = _int_log(len(t1), n1)
        deg2 = _int_log(len(t2), n2)
        if deg1 is not None and deg2 is not None and deg1 != deg2:
            raise InvalidInstanceError("strategies disagree on in-degrees")
        deg = deg1 if deg1 is not None else (deg2 if deg2 is not None else 0)
        combined = []
        for args in product(range(n), repeat=deg):
            idx1 = 0
            idx2 = 0
            for a in args:
                idx1 = idx1 * n1 + a // n2
                idx2 = idx2 * n2 + a % n2
            combined.append(t1[idx1] * n2 + t2[idx2])
        tables.append((name, tuple(combined)))
    return Strategy(n, tuple(tables))


def c5_strategy(m: int, graph: DepDigraph | None = None) -> Strategy:
    """The pair strategy on a bidirected 5-cycle over the alphabet {0..m^2-1}.

    Values are pairs (u, v) encoded u*m + v.  Walking the cycle in a fixed
    orientation, each vertex guesses (v of its predecessor, u of its
    successor); exactly m^5 configurations win.
    """
    if m < 1:
        raise InvalidInstanceError("m must be >= 1")
    if graph is None:
        from .cases import c5_digraph

        graph = c5_digraph()
    order = _cycle_order(graph)
    n = m * m
    tables = []
    for pos, v in enumerate(order):
        prev_v = order[(pos - 1) % 5]
        next_v = order[(pos + 1) % 5]
        nbrs = graph.in_neighbours(v)
        if set(nbrs) != {prev_v, next_v}:
            raise InvalidInstanceError("graph is not a bidirected 5-cycle")
        table = []
        for a_first, a_second in product(range(n), repeat=2):
            a_prev = a_first if nbrs[0] == prev_v else a_second
            a_next = a_second if nbrs[1] == next_v else a_first
            table.append((a_prev % m) * m + (a_next // m))
        tables.append((graph.vertices[v], tuple(table)))
    tables.sort(key=lambda item: graph.vertices.index(item[0]))
    return Strategy(n, tuple(tables))


def _cycle_order(graph: DepDigraph) -> list[int]:
    if len(graph.vertices) != 5 or graph.sources:
        raise InvalidInstanceError("graph is not a bidirected 5-cycle")
    undirected: dict[int, set[int]] = {v: set() for v in range(5)}
    for a, b in graph.edges:
        if (b, a) not in graph.edges or a == b:
            raise InvalidInstanceError("graph is not a bidirected 5-cycle")
        undirected[a].add(b)
        undirected[b].add(a)
    if any(len(nb) != 2 for nb in undirected.values()):
        raise InvalidInstanceError("graph is not a bidirected 5-cycle")
    order = [0, min(undirected[0])]
    while len(order) < 5:
        nxt = [u for u in undirected[order[-1]] if u != order[-2]]
        order.append(nxt[0])
    if set(order) != set(range(5)):
        raise InvalidInstanceError("graph is not a bidirected 5-cycle")
    return order


def strategy_from_interpretation(
    inst: NormalFormInstance,
    interp: Interpretation,
    graph: DepDigraph | LabelledDepGraph,
) -> Strategy:
    """Local rules read off an interpretation of a diversified flat instance.

    On the unlabelled digraph the instance must be in functional normal form
    (one rule per defined variable); on the labelled graph each equation
    vertex gets its own equation's table.  Repeated arguments collapse onto
    the vertex's distinct in-neighbour list.
    """
    if not interp.covers(inst.signature):
        raise InvalidInstanceError("interpretation does not cover the instance's signature")
    n = interp.alphabet_size
    tables = []
    if isinstance(graph, DepDigraph):
        if not is_fnf(inst):
            raise InvalidInstanceError("unlabelled strategies need functional normal form")
        for v in sorted(inst.defined):
            eq = inst.defining_equations(v)[0]
            tables.append((graph.vertices[v], _local_table(eq, interp, graph.in_neighbours(v), n)))
    else:
        for idx, eq in enumerate(inst.equations):
            e = graph.num_var_vertices + idx
            tables.append(
                (graph.vertex_names[e], _local_table(eq, interp, graph.in_neighbours(e), n))
            )
    return Strategy(n, tuple(tables))


def _local_table(eq, interp: Interpretation, nbrs: tuple[int, ...], n: int) -> tuple[int, ...]:
    table = []
    for combo in product(range(n), repeat=len(nbrs)):
        env = dict(zip(nbrs, combo))
        table.append(interp.apply(eq.symbol, tuple(env[a] for a in eq.args)))
    return tuple(table)


def parse_strategy(text: str) -> Strategy:
    """Strategy file format: `n=<nat>` header, then `<vertex>: entries`."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].replace(" ", "").startswith("n="):
        raise InvalidInstanceError("strategy file must start with 'n=<nat>'")
    n = int(lines[0].split("=", 1)[1])
    tables = []
    for ln in lines[1:]:
        name, rest = ln.split(":", 1)
        tables.append((name.strip(), tuple(int(v) for v in rest.split())))
    return Strategy(n, tuple(tables))


def format_strategy(strat: Strategy) -> str:
    lines = [f"n={strat.alphabet_size}"]
    for name, table in strat.tables:
        lines.append(f"{name}: {' '.join(str(v) for v in table)}")
    return "\n".join(lines) + "\n"
