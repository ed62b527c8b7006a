"""Lower bounds and exact values for maximum code sizes: exhaustive
interpretation search, branch-and-bound, seeded local search, dispersion,
the partial-Latin-square search, quasigroup decoders, and 0-1 ILP export.

Exhaustive enumeration is vectorised over (interpretation chunk x assignment)
grids; local search recounts incrementally after single-entry table moves.
Every returned witness is re-scored independently before the result is
emitted.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .terms import (
    MAX_ENUMERATION,
    App,
    BudgetError,
    CompiledInstance,
    Interpretation,
    InvalidInstanceError,
    Signature,
    Term,
    TermInstance,
    Var,
    _check_term,
    assignment_columns,
    count_solutions,
    interpretation_space,
    render_term,
)

__all__ = [
    "SearchConfig",
    "SearchResult",
    "DispersionProblem",
    "search_max",
    "exhaustive_counts",
    "dispersion_max",
    "encode_dispersion",
    "parse_dispersion",
    "format_dispersion",
    "image_size",
    "sols_partial_max",
    "rsols_decoders",
    "sdos_universal_check",
    "export_ilp",
    "result_tsv",
]

DEFAULT_EXHAUSTIVE_BUDGET = 1 << 40
DEFAULT_LOCAL_BUDGET = 1_000_000
DEFAULT_RESTARTS = 20
SIDEWAYS_CAP = 4096
ILP_ASSIGNMENT_CAP = 1 << 16
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class SearchConfig:
    """mode: exhaustive | branch-bound | local.

    budget caps the enumerated interpretations (exhaustive), visited nodes
    (branch-bound), or scoring evaluations (local); None picks the mode's
    default.  target stops a run early once reached.
    """

    mode: str = "exhaustive"
    budget: int | None = None
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    target: int | None = None
    threads: int = 1

    def effective_budget(self) -> int:
        if self.budget is not None:
            return self.budget
        return DEFAULT_LOCAL_BUDGET if self.mode == "local" else DEFAULT_EXHAUSTIVE_BUDGET


@dataclass(frozen=True)
class SearchResult:
    best_count: int
    witness: Interpretation
    certified: bool
    evaluations: int


def result_tsv(result: SearchResult, n: int, ideal: int) -> str:
    ratio = Fraction(result.best_count, ideal) if ideal else Fraction(0)
    flag = "certified" if result.certified else "uncertified"
    return f"{n}\t{result.best_count}\t{ideal}\t{ratio}\t{flag}\n"


# ---------------------------------------------------------------------------
# Vectorised multi-interpretation engine
# ---------------------------------------------------------------------------


class _InterpEngine:
    """Scores batches of interpretations of the used symbols at once.

    Interpretation index g runs over the used symbols in signature order,
    first symbol most significant, table entries as an odometer; this makes
    np.argmax(counts) the lexicographically smallest witness.
    """

    def __init__(self, inst: TermInstance, n: int):
        self.inst = inst
        self.n = n
        self.v = inst.num_variables
        self.space = n**self.v
        if self.space > MAX_ENUMERATION:
            raise InvalidInstanceError(f"assignment space {n}^{self.v} too large")
        self.compiled = CompiledInstance(inst)
        used = set(self.compiled.symbols_used)
        self.symbols = [(s, a) for s, a in inst.signature.symbols if s in used]
        self.table_lens = [n**a for _, a in self.symbols]
        self.table_counts = [n**length for length in self.table_lens]
        self.used_space = 1
        for c in self.table_counts:
            self.used_space *= c

    def decode_tables(self, lo: int, hi: int) -> dict[str, np.ndarray]:
        """Table arrays of shape (hi-lo, table length) per used symbol."""
        tables = {}
        rem = np.arange(lo, hi, dtype=np.int64)
        for (name, _), length, count in zip(
            reversed(self.symbols), reversed(self.table_lens), reversed(self.table_counts)
        ):
            t_idx = rem % count
            rem = rem // count
            powers = self.n ** np.arange(length - 1, -1, -1, dtype=np.int64)
            tables[name] = (t_idx[:, None] // powers[None, :]) % self.n
        return tables

    def counts_range(self, lo: int, hi: int) -> np.ndarray:
        """Exact solution counts for used-symbol interpretation indices [lo, hi).

        Node values are freed as soon as no later application or equation
        needs them, keeping the live set small for flat instances.
        """
        tables = self.decode_tables(lo, hi)
        nodes = self.compiled.nodes
        uses = [0] * len(nodes)
        eq_ready: dict[int, list[tuple[int, int]]] = {}
        for node in nodes:
            if node[0] == "app":
                for a in node[2]:
                    uses[a] += 1
        for lhs, rhs in self.compiled.equation_nodes:
            uses[lhs] += 1
            uses[rhs] += 1
            eq_ready.setdefault(max(lhs, rhs), []).append((lhs, rhs))

        G = hi - lo
        counts = np.zeros(G, dtype=np.int64)
        a_chunk = max(1, _CHUNK_CELLS // max(G, 1))
        rows = np.arange(G)
        for a_lo in range(0, self.space, a_chunk):
            a_hi = min(a_lo + a_chunk, self.space)
            cols = assignment_columns(self.n, self.v, a_lo, a_hi)
            ok = np.ones((G, a_hi - a_lo), dtype=bool)
            values: list[np.ndarray | None] = [None] * len(nodes)
            remaining = list(uses)

            def release(node_id: int):
                remaining[node_id] -= 1
                if remaining[node_id] == 0:
                    values[node_id] = None

            for i, node in enumerate(nodes):
                if node[0] == "var":
                    values[i] = cols[node[1]]
                else:
                    _, symbol, arg_ids = node
                    idx = None
                    for a in arg_ids:
                        idx = values[a].copy() if idx is None else idx * self.n + values[a]
                    if idx is None:
                        idx = np.zeros(a_hi - a_lo, dtype=np.int64)
                    if idx.ndim == 1:
                        idx = np.broadcast_to(idx, (G, a_hi - a_lo))
                    values[i] = tables[symbol][rows[:, None], idx]
                    for a in arg_ids:
                        release(a)
                for lhs, rhs in eq_ready.get(i, ()):
                    ok &= values[lhs] == values[rhs]
                    release(lhs)
                    release(rhs)
            counts += ok.sum(axis=1)
        return counts

    def interpretation_at(self, index: int) -> Interpretation:
        """Witness for a used-symbol index; unused symbols get all-zero tables."""
        used_tables = {}
        rem = index
        for (name, _), length, count in zip(
            reversed(self.symbols), reversed(self.table_lens), reversed(self.table_counts)
        ):
            t_idx = rem % count
            rem //= count
            entries = []
            for _ in range(length):
                entries.append(t_idx % self.n)
                t_idx //= self.n
            used_tables[name] = tuple(reversed(entries))
        tables = []
        for name, arity in self.inst.signature.symbols:
            tables.append((name, used_tables.get(name, (0,) * (self.n**arity))))
        return Interpretation(self.inst.signature, self.n, tuple(tables))


def exhaustive_counts(inst: TermInstance, n: int, budget: int = DEFAULT_EXHAUSTIVE_BUDGET) -> np.ndarray:
    """Solution counts for every interpretation of the used symbols, in
    odometer order.  Intended for property tests at small n."""
    engine = _InterpEngine(inst, n)
    if engine.used_space > budget or engine.used_space > (1 << 31):
        raise BudgetError(f"interpretation space {engine.used_space} exceeds budget")
    out = np.empty(engine.used_space, dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(engine.space, 1))
    for lo in range(0, engine.used_space, step):
        hi = min(lo + step, engine.used_space)
        out[lo:hi] = engine.counts_range(lo, hi)
    return out


# ---------------------------------------------------------------------------
# search_max: exhaustive / branch-and-bound / local
# ---------------------------------------------------------------------------


def search_max(inst: TermInstance, n: int, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Maximum solution count over interpretations on n letters, per cfg.

    Exhaustive and completed branch-and-bound runs are certified and return
    the lexicographically first optimal witness; local search returns the
    best interpretation found.  The witness's score is always recomputed by
    count_solutions before returning.
    """
    if cfg.mode == "exhaustive":
        result = _search_exhaustive(inst, n, cfg)
    elif cfg.mode == "branch-bound":
        result = _search_branch_bound(inst, n, cfg)
    elif cfg.mode == "local":
        result = _search_local(inst, n, cfg)
    else:
        raise InvalidInstanceError(f"unknown search mode {cfg.mode!r}")
    check = count_solutions(inst, result.witness).count
    if check != result.best_count:
        raise AssertionError(f"witness re-verification failed: {check} != {result.best_count}")
    return result


def _search_exhaustive(inst: TermInstance, n: int, cfg: SearchConfig) -> SearchResult:
    budget = cfg.effective_budget()
    full_space = interpretation_space(inst.signature, n)
    if full_space > budget:
        raise BudgetError(
            f"exhaustive search over {full_space} interpretations exceeds budget {budget}"
        )
    engine = _InterpEngine(inst, n)
    best = -1
    arg = 0
    step = max(1, _CHUNK_CELLS // max(engine.space, 1))
    for lo in range(0, engine.used_space, step):
        hi = min(lo + step, engine.used_space)
        counts = engine.counts_range(lo, hi)
        pos = int(np.argmax(counts))
        if counts[pos] > best:
            best = int(counts[pos])
            arg = lo + pos
    return SearchResult(best, engine.interpretation_at(arg), True, engine.used_space)


class _PartialEvaluator:
    """Statuses of all assignments under a partially filled interpretation.

    Unknown values are -1; an equation is violated once both sides are known
    and differ, which no completion can repair, so
    (space - violated) is an admissible upper bound.
    """

    def __init__(self, inst: TermInstance, n: int):
        self.compiled = CompiledInstance(inst)
        self.n = n
        self.v = inst.num_variables
        self.space = n**self.v
        if self.space * max(1, len(self.compiled.nodes)) > _CHUNK_CELLS * 8:
            raise BudgetError("instance too large for branch-and-bound evaluation")
        self.cols = assignment_columns(n, self.v, 0, self.space)

    def bound_and_exact(self, tables: dict[str, np.ndarray]) -> tuple[int, int | None]:
        values: list[np.ndarray] = []
        for node in self.compiled.nodes:
            if node[0] == "var":
                values.append(self.cols[node[1]])
            else:
                _, symbol, arg_ids = node
                known = np.ones(self.space, dtype=bool)
                idx = np.zeros(self.space, dtype=np.int64)
                for a in arg_ids:
                    known &= values[a] >= 0
                    idx = idx * self.n + np.maximum(values[a], 0)
                val = np.where(known, tables[symbol][idx], -1)
                values.append(val)
        violated = np.zeros(self.space, dtype=bool)
        undetermined = np.zeros(self.space, dtype=bool)
        for lhs, rhs in self.compiled.equation_nodes:
            lv, rv = values[lhs], values[rhs]
            both = (lv >= 0) & (rv >= 0)
            violated |= both & (lv != rv)
            undetermined |= ~both
        bound = self.space - int(np.count_nonzero(violated))
        exact = None
        if not undetermined.any():
            exact = bound
        return bound, exact


def _search_branch_bound(inst: TermInstance, n: int, cfg: SearchConfig) -> SearchResult:
    budget = cfg.effective_budget()
    evaluator = _PartialEvaluator(inst, n)
    usage: dict[str, int] = {}
    for node in evaluator.compiled.nodes:
        if node[0] == "app":
            usage[node[1]] = usage.get(node[1], 0) + 1
    symbols = sorted(usage, key=lambda s: (-usage[s], inst.signature.names.index(s)))
    slots = [(s, e) for s in symbols for e in range(n ** inst.signature.arity(s))]
    tables = {s: np.full(n ** inst.signature.arity(s), -1, dtype=np.int64) for s in symbols}

    best = -1
    best_tables: dict[str, tuple[int, ...]] | None = None
    nodes_visited = 0

    def rec(depth: int):
        nonlocal best, best_tables, nodes_visited
        nodes_visited += 1
        if nodes_visited > budget:
            raise BudgetError(f"branch-and-bound exceeded budget {budget}")
        bound, exact = evaluator.bound_and_exact(tables)
        if bound <= best:
            return
        if depth == len(slots):
            if exact is None:
                raise AssertionError("full assignment left undetermined statuses")
            if exact > best:
                best = exact
                best_tables = {s: tuple(int(v) for v in t) for s, t in tables.items()}
            return
        sym, entry = slots[depth]
        for val in range(n):
            tables[sym][entry] = val
            rec(depth + 1)
        tables[sym][entry] = -1

    rec(0)
    assert best_tables is not None
    full = []
    for name, arity in inst.signature.symbols:
        full.append((name, best_tables.get(name, (0,) * (n**arity))))
    witness = Interpretation(inst.signature, n, tuple(full))
    return SearchResult(best, witness, True, nodes_visited)


class IncrementalCounter:
    """Exact count maintenance under single-entry table moves.

    Precomputes, per application node, the table entry index used by every
    assignment.  Changing one entry of one symbol only affects assignments
    where some application of that symbol reads it; those are re-evaluated
    bottom-up and the per-assignment violation counts are patched.
    """

    def __init__(self, inst: TermInstance, n: int):
        self.inst = inst
        self.n = n
        self.v = inst.num_variables
        self.space = n**self.v
        self.compiled = CompiledInstance(inst)
        if self.space * max(1, len(self.compiled.nodes)) > _CHUNK_CELLS * 16:
            raise BudgetError("instance too large for incremental counting")
        self.cols = assignment_columns(n, self.v, 0, self.space)
        self.app_nodes = [i for i, nd in enumerate(self.compiled.nodes) if nd[0] == "app"]
        self.tables: dict[str, np.ndarray] = {}
        self.values: list[np.ndarray] = []
        self.app_idx: dict[int, np.ndarray] = {}
        self.violations: np.ndarray | None = None
        self.count = 0

    def set_interpretation(self, tables: dict[str, np.ndarray]) -> int:
        self.tables = {s: np.array(t, dtype=np.int64) for s, t in tables.items()}
        self.values = []
        for i, node in enumerate(self.compiled.nodes):
            if node[0] == "var":
                self.values.append(self.cols[node[1]].copy())
            else:
                _, symbol, arg_ids = node
                idx = np.zeros(self.space, dtype=np.int64)
                for a in arg_ids:
                    idx = idx * self.n + self.values[a]
                self.app_idx[i] = idx
                self.values.append(self.tables[symbol][idx])
        self.violations = np.zeros(self.space, dtype=np.int16)
        for lhs, rhs in self.compiled.equation_nodes:
            self.violations += (self.values[lhs] != self.values[rhs]).astype(np.int16)
        self.count = int(np.count_nonzero(self.violations == 0))
        return self.count

    def score_move(self, symbol: str, entry: int, value: int):
        """Count after setting tables[symbol][entry] = value, without committing.

        Returns (count, undo), where undo is the state needed by commit.
        """
        affected = np.zeros(self.space, dtype=bool)
        for i in self.app_nodes:
            if self.compiled.nodes[i][1] == symbol:
                affected |= self.app_idx[i] == entry
        idx = np.nonzero(affected)[0]
        old_value = int(self.tables[symbol][entry])
        if idx.size == 0 or value == old_value:
            return self.count, (symbol, entry, value, idx, None, None)
        self.tables[symbol][entry] = value
        new_vals: dict[int, np.ndarray] = {}
        new_idx: dict[int, np.ndarray] = {}
        for i, node in enumerate(self.compiled.nodes):
            if node[0] == "var":
                continue
            _, sym, arg_ids = node
            ii = np.zeros(idx.size, dtype=np.int64)
            for a in arg_ids:
                av = new_vals[a] if a in new_vals else self.values[a][idx]
                ii = ii * self.n + av
            new_idx[i] = ii
            new_vals[i] = self.tables[sym][ii]
        delta = np.zeros(idx.size, dtype=np.int16)
        for lhs, rhs in self.compiled.equation_nodes:
            lv = new_vals[lhs] if lhs in new_vals else self.values[lhs][idx]
            rv = new_vals[rhs] if rhs in new_vals else self.values[rhs][idx]
            delta += (lv != rv).astype(np.int16)
        old = self.violations[idx]
        new_count = self.count - int(np.count_nonzero(old == 0)) + int(np.count_nonzero(delta == 0))
        self.tables[symbol][entry] = old_value
        return new_count, (symbol, entry, value, idx, new_vals, (new_idx, delta, new_count))

    def commit(self, undo) -> int:
        symbol, entry, value, idx, new_vals, extra = undo
        if extra is None:
            self.tables[symbol][entry] = value
            return self.count
        new_idx, delta, new_count = extra
        self.tables[symbol][entry] = value
        for i, vals in new_vals.items():
            self.values[i][idx] = vals
            self.app_idx[i][idx] = new_idx[i]
        self.violations[idx] = delta
        self.count = new_count
        return self.count


def split_components(inst: TermInstance) -> tuple[list[TermInstance], int]:
    """Sub-instances induced by the connected components of variable
    co-occurrence, plus the number of variables in no equation.

    The solution count of the whole instance is the product of the
    components' counts times n**(free variables)."""
    v = inst.num_variables
    parent = list(range(v))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def vars_of(t: Term, acc: set[int]):
        if isinstance(t, Var):
            acc.add(t.index)
        else:
            for a in t.args:
                vars_of(a, acc)

    eq_vars: list[set[int]] = []
    for lhs, rhs in inst.equations:
        acc: set[int] = set()
        vars_of(lhs, acc)
        vars_of(rhs, acc)
        eq_vars.append(acc)
        first = next(iter(acc), None)
        if first is not None:
            for other in acc:
                ra, rb = find(first), find(other)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    used = set().union(*eq_vars) if eq_vars else set()
    groups: dict[int | None, list[int]] = {}
    for i, acc in enumerate(eq_vars):
        root = find(next(iter(acc))) if acc else None
        key = root if root is None else find(root)
        groups.setdefault(key, []).append(i)

    components = []
    for key, eq_ids in sorted(groups.items(), key=lambda kv: (kv[0] is None, kv[0] or 0)):
        comp_vars = sorted({x for e in eq_ids for x in eq_vars[e]})
        remap = {old: new for new, old in enumerate(comp_vars)}

        def rewrite(t: Term) -> Term:
            if isinstance(t, Var):
                return Var(remap[t.index])
            return App(t.symbol, tuple(rewrite(a) for a in t.args))

        components.append(
            TermInstance(
                inst.signature,
                tuple(inst.variables[i] for i in comp_vars),
                tuple((rewrite(inst.equations[e][0]), rewrite(inst.equations[e][1])) for e in eq_ids),
            )
        )
    return components, v - len(used)


class _TinyCounter:
    """Pure-python full-recount scorer for components with small spaces,
    where per-call numpy overhead would dominate."""

    def __init__(self, inst: TermInstance, n: int):
        self.compiled = CompiledInstance(inst)
        self.n = n
        self.assignments = list(product(range(n), repeat=inst.num_variables))
        self.tables: dict[str, list[int]] = {}
        self.count = 0

    def set_interpretation(self, tables: dict) -> int:
        self.tables = {s: [int(v) for v in t] for s, t in tables.items() if s in set(self.compiled.symbols_used)}
        self.count = self._recount()
        return self.count

    def _recount(self) -> int:
        n = self.n
        nodes = self.compiled.nodes
        eqs = self.compiled.equation_nodes
        count = 0
        values = [0] * len(nodes)
        for a in self.assignments:
            for i, node in enumerate(nodes):
                if node[0] == "var":
                    values[i] = a[node[1]]
                else:
                    idx = 0
                    for arg in node[2]:
                        idx = idx * n + values[arg]
                    values[i] = self.tables[node[1]][idx]
            if all(values[l] == values[r] for l, r in eqs):
                count += 1
        return count

    def score_move(self, symbol: str, entry: int, value: int):
        if symbol not in self.tables:
            return self.count, (symbol, entry, value, self.count)
        old = self.tables[symbol][entry]
        self.tables[symbol][entry] = value
        count = self._recount()
        self.tables[symbol][entry] = old
        return count, (symbol, entry, value, count)

    def commit(self, undo) -> int:
        symbol, entry, value, count = undo
        if symbol in self.tables:
            self.tables[symbol][entry] = value
        self.count = count
        return count


_TINY_SPACE = 512


class ComponentScorer:
    """Product-of-components solution counting under single-entry moves.

    A table move re-scores only the components whose equations use the
    changed symbol; the total count is the product of component counts
    times n**(variables outside every equation)."""

    def __init__(self, inst: TermInstance, n: int):
        self.inst = inst
        self.n = n
        components, free = split_components(inst)
        self.free_factor = n**free
        self.parts = []
        for comp in components:
            space = n**comp.num_variables
            if space <= _TINY_SPACE:
                self.parts.append(_TinyCounter(comp, n))
            else:
                self.parts.append(IncrementalCounter(comp, n))
        self.by_symbol: dict[str, list[int]] = {}
        for i, comp in enumerate(components):
            for s in CompiledInstance(comp).symbols_used:
                self.by_symbol.setdefault(s, []).append(i)
        self.tables: dict[str, list[int]] = {}
        self.counts: list[int] = []

    def set_interpretation(self, tables: dict) -> int:
        self.tables = {s: [int(v) for v in t] for s, t in tables.items()}
        self.counts = [part.set_interpretation(self.tables) for part in self.parts]
        return self.count

    @property
    def count(self) -> int:
        total = self.free_factor
        for c in self.counts:
            total *= c
        return total

    def score_move(self, symbol: str, entry: int, value: int):
        part_ids = self.by_symbol.get(symbol, [])
        undos = []
        new_counts = dict()
        for i in part_ids:
            c, undo = self.parts[i].score_move(symbol, entry, value)
            undos.append((i, undo))
            new_counts[i] = c
        total = self.free_factor
        for i, c in enumerate(self.counts):
            total *= new_counts.get(i, c)
        return total, (symbol, entry, value, undos)

    def commit(self, undo) -> int:
        symbol, entry, value, undos = undo
        self.tables[symbol][entry] = value
        for i, part_undo in undos:
            self.counts[i] = self.parts[i].commit(part_undo)
        return self.count


def _search_local(inst: TermInstance, n: int, cfg: SearchConfig) -> SearchResult:
    budget = cfg.effective_budget()
    engine_symbols = [(s, inst.signature.arity(s)) for s in CompiledInstance(inst).symbols_used]
    if not engine_symbols:
        interp = _zero_interpretation(inst.signature, n)
        return SearchResult(count_solutions(inst, interp).count, interp, False, 0)
    restarts = max(1, cfg.restarts)
    per_restart = max(1, budget // restarts)
    ideal = n**inst.num_variables

    def run_restart(r: int):
        rng = np.random.default_rng((cfg.seed, r))
        scorer = ComponentScorer(inst, n)
        tables = {s: rng.integers(0, n, size=n**a) for s, a in engine_symbols}
        cur = scorer.set_interpretation(tables)
        best = cur
        best_tables = {s: tuple(t) for s, t in scorer.tables.items()}
        sideways = 0
        evals = 0
        slots = [(s, e) for s, a in engine_symbols for e in range(n**a)]
        while evals < per_restart:
            if best >= ideal or (cfg.target is not None and best >= cfg.target):
                break
            s, e = slots[int(rng.integers(0, len(slots)))]
            val = int(rng.integers(0, n))
            if val == scorer.tables[s][e]:
                continue
            cand, undo = scorer.score_move(s, e, val)
            evals += 1
            if cand > cur or (cand == cur and sideways < SIDEWAYS_CAP):
                sideways = 0 if cand > cur else sideways + 1
                cur = scorer.commit(undo)
                if cur > best:
                    best = cur
                    best_tables = {s2: tuple(t) for s2, t in scorer.tables.items()}
        return best, best_tables, evals

    results = []
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run_restart, range(restarts)))
    else:
        results = [run_restart(r) for r in range(restarts)]

    total_evals = sum(r[2] for r in results)
    best_count = max(r[0] for r in results)
    tables = min(
        (tables for count, tables, _ in results if count == best_count),
        key=lambda t: tuple(t[s] for s, _ in inst.signature.symbols if s in t),
    )
    full = []
    for name, arity in inst.signature.symbols:
        full.append((name, tables.get(name, (0,) * (n**arity))))
    witness = Interpretation(inst.signature, n, tuple(full))
    return SearchResult(best_count, witness, False, total_evals)


def _zero_interpretation(signature: Signature, n: int) -> Interpretation:
    return Interpretation(
        signature, n, tuple((name, (0,) * (n**arity)) for name, arity in signature.symbols)
    )


# ---------------------------------------------------------------------------
# Dispersion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DispersionProblem:
    """Output terms t_1..t_s over shared input variables."""

    signature: Signature
    variables: tuple[str, ...]
    terms: tuple[Term, ...]

    def __post_init__(self):
        for t in self.terms:
            _check_term(t, self.signature, len(self.variables))

    def to_instance(self) -> TermInstance:
        """The terms as trivial equations t_i = t_i (for engine reuse)."""
        return TermInstance(self.signature, self.variables, tuple((t, t) for t in self.terms))


def image_size(prob: DispersionProblem, interp: Interpretation) -> int:
    """|Im| of the tuple map induced by the terms, by direct enumeration."""
    from .terms import evaluate_term

    n = interp.alphabet_size
    seen = set()
    for assignment in product(range(n), repeat=len(prob.variables)):
        seen.add(tuple(evaluate_term(t, interp, assignment) for t in prob.terms))
    return len(seen)


def dispersion_max(prob: DispersionProblem, n: int, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Maximum number of distinct output tuples over all interpretations."""
    if cfg.mode == "exhaustive":
        result = _dispersion_exhaustive(prob, n, cfg)
    elif cfg.mode == "local":
        result = _dispersion_local(prob, n, cfg)
    elif cfg.mode == "branch-bound":
        result = _dispersion_branch_bound(prob, n, cfg)
    else:
        raise InvalidInstanceError(f"unknown search mode {cfg.mode!r}")
    check = image_size(prob, result.witness)
    if check != result.best_count:
        raise AssertionError(f"witness re-verification failed: {check} != {result.best_count}")
    return result


def _encode_outputs(values: np.ndarray, n: int, s: int) -> np.ndarray:
    """Output tuples -> integers; values has shape (..., s) along the last axis."""
    if s and n**s > MAX_ENUMERATION:
        raise InvalidInstanceError("output tuple space too large to encode")
    code = np.zeros(values.shape[:-1], dtype=np.int64)
    for i in range(s):
        code = code * n + values[..., i]
    return code


def _dispersion_exhaustive(prob: DispersionProblem, n: int, cfg: SearchConfig) -> SearchResult:
    budget = cfg.effective_budget()
    full_space = interpretation_space(prob.signature, n)
    if full_space > budget:
        raise BudgetError(
            f"exhaustive search over {full_space} interpretations exceeds budget {budget}"
        )
    inst = prob.to_instance()
    engine = _InterpEngine(inst, n)
    term_nodes = [lhs for lhs, _ in engine.compiled.equation_nodes]
    s = len(prob.terms)
    best = -1
    arg = 0
    step = max(1, _CHUNK_CELLS // max(engine.space * max(s, 1), 1))
    for lo in range(0, engine.used_space, step):
        hi = min(lo + step, engine.used_space)
        counts = _image_counts_range(engine, term_nodes, lo, hi, s)
        pos = int(np.argmax(counts))
        if counts[pos] > best:
            best = int(counts[pos])
            arg = lo + pos
    return SearchResult(best, engine.interpretation_at(arg), True, engine.used_space)


def _image_counts_range(engine: _InterpEngine, term_nodes, lo: int, hi: int, s: int) -> np.ndarray:
    tables = engine.decode_tables(lo, hi)
    G = hi - lo
    rows = np.arange(G)
    cols = assignment_columns(engine.n, engine.v, 0, engine.space)
    values: list[np.ndarray] = []
    for node in engine.compiled.nodes:
        if node[0] == "var":
            values.append(np.broadcast_to(cols[node[1]], (G, engine.space)))
        else:
            _, symbol, arg_ids = node
            idx = None
            for a in arg_ids:
                idx = values[a].astype(np.int64) if idx is None else idx * engine.n + values[a]
            if idx is None:
                idx = np.zeros((G, engine.space), dtype=np.int64)
            values.append(tables[symbol][rows[:, None], idx])
    out = np.stack([np.broadcast_to(values[t], (G, engine.space)) for t in term_nodes], axis=-1)
    codes = _encode_outputs(out, engine.n, s)
    codes.sort(axis=1)
    if engine.space == 0:
        return np.zeros(G, dtype=np.int64)
    distinct = np.ones(G, dtype=np.int64)
    if engine.space > 1:
        distinct += (codes[:, 1:] != codes[:, :-1]).sum(axis=1)
    return distinct


def _dispersion_local(prob: DispersionProblem, n: int, cfg: SearchConfig) -> SearchResult:
    budget = cfg.effective_budget()
    symbols = _used_symbols(prob)
    if not symbols:
        interp = _zero_interpretation(prob.signature, n)
        return SearchResult(image_size(prob, interp), interp, False, 0)
    restarts = max(1, cfg.restarts)
    per_restart = max(1, budget // restarts)
    ideal = min(n ** len(prob.variables), n ** len(prob.terms))
    scorer = _VectorImageScorer(prob, n)

    def run_restart(r: int):
        rng = np.random.default_rng((cfg.seed, r))
        tables = {s: rng.integers(0, n, size=n**a) for s, a in symbols}
        cur = scorer.score(tables)
        best, best_tables = cur, {s: tuple(int(v) for v in t) for s, t in tables.items()}
        sideways = 0
        evals = 0
        slots = [(s, e) for s, a in symbols for e in range(n**a)]
        while evals < per_restart:
            if best >= ideal or (cfg.target is not None and best >= cfg.target):
                break
            s, e = slots[int(rng.integers(0, len(slots)))]
            val = int(rng.integers(0, n))
            if val == int(tables[s][e]):
                continue
            old = int(tables[s][e])
            tables[s][e] = val
            cand = scorer.score(tables)
            evals += 1
            if cand > cur or (cand == cur and sideways < SIDEWAYS_CAP):
                sideways = 0 if cand > cur else sideways + 1
                cur = cand
                if cur > best:
                    best = cur
                    best_tables = {s2: tuple(int(v) for v in t) for s2, t in tables.items()}
            else:
                tables[s][e] = old
        return best, best_tables, evals

    results = [run_restart(r) for r in range(restarts)]
    best_count = max(r[0] for r in results)
    tables = min(
        (tables for count, tables, _ in results if count == best_count),
        key=lambda t: tuple(t[s] for s, _ in prob.signature.symbols if s in t),
    )
    full = []
    for name, arity in prob.signature.symbols:
        full.append((name, tables.get(name, (0,) * (n**arity))))
    witness = Interpretation(prob.signature, n, tuple(full))
    return SearchResult(best_count, witness, False, sum(r[2] for r in results))


class _VectorImageScorer:
    def __init__(self, prob: DispersionProblem, n: int):
        self.prob = prob
        self.n = n
        self.compiled = CompiledInstance(prob.to_instance())
        self.space = n ** len(prob.variables)
        if self.space > _CHUNK_CELLS:
            raise BudgetError("input space too large for local dispersion search")
        self.cols = assignment_columns(n, len(prob.variables), 0, self.space)
        self.term_nodes = [lhs for lhs, _ in self.compiled.equation_nodes]

    def score(self, tables: dict[str, np.ndarray]) -> int:
        values: list[np.ndarray] = []
        for node in self.compiled.nodes:
            if node[0] == "var":
                values.append(self.cols[node[1]])
            else:
                _, symbol, arg_ids = node
                idx = np.zeros(self.space, dtype=np.int64)
                for a in arg_ids:
                    idx = idx * self.n + values[a]
                values.append(np.asarray(tables[symbol])[idx])
        out = np.stack([values[t] for t in self.term_nodes], axis=-1)
        codes = _encode_outputs(out, self.n, len(self.term_nodes))
        return int(np.unique(codes).size)


def _dispersion_branch_bound(prob: DispersionProblem, n: int, cfg: SearchConfig) -> SearchResult:
    budget = cfg.effective_budget()
    symbols = _used_symbols(prob)
    compiled = CompiledInstance(prob.to_instance())
    space = n ** len(prob.variables)
    if space * max(1, len(compiled.nodes)) > _CHUNK_CELLS * 8:
        raise BudgetError("instance too large for branch-and-bound evaluation")
    cols = assignment_columns(n, len(prob.variables), 0, space)
    term_nodes = [lhs for lhs, _ in compiled.equation_nodes]
    usage: dict[str, int] = {}
    for node in compiled.nodes:
        if node[0] == "app":
            usage[node[1]] = usage.get(node[1], 0) + 1
    order = sorted(usage, key=lambda s: (-usage[s], prob.signature.names.index(s)))
    slots = [(s, e) for s in order for e in range(n ** prob.signature.arity(s))]
    tables = {s: np.full(n ** prob.signature.arity(s), -1, dtype=np.int64) for s in order}
    best = -1
    best_tables = None
    visited = 0

    def evaluate() -> tuple[int, int | None]:
        values: list[np.ndarray] = []
        for node in compiled.nodes:
            if node[0] == "var":
                values.append(cols[node[1]])
            else:
                _, symbol, arg_ids = node
                known = np.ones(space, dtype=bool)
                idx = np.zeros(space, dtype=np.int64)
                for a in arg_ids:
                    known &= values[a] >= 0
                    idx = idx * n + np.maximum(values[a], 0)
                values.append(np.where(known, tables[symbol][idx], -1))
        out = np.stack([values[t] for t in term_nodes], axis=-1)
        determined = (out >= 0).all(axis=-1)
        codes = _encode_outputs(np.maximum(out, 0), n, len(term_nodes))
        known_codes = np.unique(codes[determined])
        undecided = int(np.count_nonzero(~determined))
        bound = int(known_codes.size) + undecided
        exact = int(known_codes.size) if undecided == 0 else None
        return bound, exact

    def rec(depth: int):
        nonlocal best, best_tables, visited
        visited += 1
        if visited > budget:
            raise BudgetError(f"branch-and-bound exceeded budget {budget}")
        bound, exact = evaluate()
        if bound <= best:
            return
        if depth == len(slots):
            if exact is not None and exact > best:
                best = exact
                best_tables = {s: tuple(int(v) for v in t) for s, t in tables.items()}
            return
        sym, entry = slots[depth]
        for val in range(n):
            tables[sym][entry] = val
            rec(depth + 1)
        tables[sym][entry] = -1

    rec(0)
    assert best_tables is not None
    full = []
    for name, arity in prob.signature.symbols:
        full.append((name, best_tables.get(name, (0,) * (n**arity))))
    return SearchResult(best, Interpretation(prob.signature, n, tuple(full)), True, visited)


def _used_symbols(prob: DispersionProblem) -> list[tuple[str, int]]:
    used = set()

    def walk(t: Term):
        if isinstance(t, App):
            used.add(t.symbol)
            for a in t.args:
                walk(a)

    for t in prob.terms:
        walk(t)
    return [(s, a) for s, a in prob.signature.symbols if s in used]


def encode_dispersion(prob: DispersionProblem) -> TermInstance:
    """Dispersion as term coding: fresh outputs y_i = t_i(x) plus arity-s
    decoders x_j = h_j(y); solution counts equal image sizes at every n."""
    taken = set(prob.variables) | set(prob.signature.names)
    s = len(prob.terms)
    k = len(prob.variables)
    y_names = [f"y{i + 1}" for i in range(s)]
    if any(name in taken for name in y_names):
        y_names = [f"o{i + 1}" for i in range(s)]
    while any(name in taken for name in y_names):
        y_names = [name + "'" for name in y_names]
    taken |= set(y_names)
    h_names = [f"h{j + 1}" for j in range(k)]
    if any(name in taken for name in h_names):
        h_names = [f"g{j + 1}" for j in range(k)]
    while any(name in taken for name in h_names):
        h_names = [name + "'" for name in h_names]

    variables = prob.variables + tuple(y_names)
    signature = Signature(prob.signature.symbols + tuple((h, s) for h in h_names))
    y_vars = tuple(Var(k + i) for i in range(s))
    equations = [(Var(k + i), prob.terms[i]) for i in range(s)]
    equations += [(Var(j), App(h_names[j], y_vars)) for j in range(k)]
    return TermInstance(signature, variables, tuple(equations))


def parse_dispersion(text: str) -> DispersionProblem:
    """Dispersion source: var/fun/const declarations plus `out <term>;` lines."""
    from .terms import _Parser, ParseError

    parser = _Parser(text)
    terms: list[Term] = []
    while parser._peek()[0] != "eof":
        kind, value, line, col = parser._peek()
        if kind == "ident" and value == "out":
            parser._next()
            terms.append(parser._term())
            parser._expect("punct", ";")
            continue
        before = parser.pos
        kind, value, line, col = parser._next()
        if kind != "ident" or value not in ("var", "fun", "const"):
            raise ParseError(f"expected declaration or 'out', got {value!r}", line, col)
        parser.pos = before
        _parse_one_decl(parser)
    signature = Signature(tuple(parser.symbols.items()))
    return DispersionProblem(signature, tuple(parser.variables), tuple(terms))


def _parse_one_decl(parser) -> None:
    kind, value, line, col = parser._next()
    if value == "var":
        names = []
        while parser._peek()[0] == "ident":
            names.append(parser._next())
        parser._expect("punct", ";")
        for _, name, nline, ncol in names:
            parser._declare(name, nline, ncol, arity=None)
    elif value == "fun":
        _, name, nline, ncol = parser._expect("ident")
        parser._expect("punct", "/")
        _, nat, *_ = parser._expect("nat")
        parser._expect("punct", ";")
        parser._declare(name, nline, ncol, arity=int(nat))
    else:
        _, name, nline, ncol = parser._expect("ident")
        parser._expect("punct", ";")
        parser._declare(name, nline, ncol, arity=0)


def format_dispersion(prob: DispersionProblem) -> str:
    lines = []
    if prob.variables:
        lines.append(f"var {' '.join(prob.variables)};")
    for name, arity in prob.signature.symbols:
        lines.append(f"const {name};" if arity == 0 else f"fun {name}/{arity};")
    for t in prob.terms:
        lines.append(f"out {render_term(t, prob.variables)};")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Partial-SOLS search, quasigroup decoders, self-decoding check
# ---------------------------------------------------------------------------


def _sols_conflicts(table: list[int], n: int) -> list[int]:
    """Conflict bitmask per cell of the n x n grid (cells row-major x*n+y):
    two cells conflict when no valid score set can contain both."""
    conflicts = [0] * (n * n)

    def add(p: int, q: int):
        conflicts[p] |= 1 << q
        conflicts[q] |= 1 << p

    phi = [(table[x * n + y], table[y * n + x]) for x in range(n) for y in range(n)]
    for p in range(n * n):
        xp, yp = divmod(p, n)
        for q in range(p + 1, n * n):
            xq, yq = divmod(q, n)
            if yp == yq and table[p] == table[q]:
                add(p, q)  # column of the Latin condition
            elif xp == xq and table[p] == table[q]:
                add(p, q)  # row of the Latin condition
            if phi[p] == phi[q]:
                add(p, q)  # superposition collision
    return conflicts


def _max_independent_set(conflicts: list[int]) -> tuple[int, int]:
    """(size, lexicographically-first witness mask) over the conflict graph."""
    full = (1 << len(conflicts)) - 1
    memo: dict[int, int] = {}

    def mis(mask: int) -> int:
        if mask == 0:
            return 0
        if mask in memo:
            return memo[mask]
        v = (mask & -mask).bit_length() - 1
        skip = mis(mask & ~(1 << v))
        take = 1 + mis(mask & ~((1 << v) | conflicts[v]))
        memo[mask] = best = max(skip, take)
        return best

    size = mis(full)
    witness = 0
    mask = full
    remaining = size
    for v in range(len(conflicts)):
        if not mask & (1 << v):
            continue
        with_v = 1 + mis(mask & ~((1 << v) | conflicts[v]))
        if with_v == remaining:
            witness |= 1 << v
            mask &= ~((1 << v) | conflicts[v])
            remaining -= 1
        else:
            mask &= ~(1 << v)
        if remaining == 0:
            break
    return size, witness


def sols_instance() -> TermInstance:
    from .cases import load_case

    return load_case("sols").instance


def sols_partial_max(n: int, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Maximum score of the standard self-orthogonal-square system, computed
    over (square, admissible cell set) pairs rather than raw decoder tables.

    A cell set is admissible for f when f is row- and column-injective on it
    and the superposition pair map is injective on it; decoders realising
    exactly such a set always exist, so the maximum admissible size equals
    the full system's maximum code size.
    """
    if cfg.mode == "exhaustive":
        budget = cfg.effective_budget()
        space = n ** (n * n)
        if space > budget:
            raise BudgetError(f"{space} squares exceed budget {budget}")
        best = -1
        best_table: list[int] | None = None
        best_mask = 0
        table = [0] * (n * n)
        for g in range(space):
            rem = g
            for e in range(n * n - 1, -1, -1):
                table[e] = rem % n
                rem //= n
            size, mask = _max_independent_set(_sols_conflicts(table, n))
            if size > best:
                best, best_table, best_mask = size, list(table), mask
        assert best_table is not None
        witness = _sols_witness(best_table, best_mask, n)
        count = count_solutions(sols_instance(), witness).count
        if count != best:
            raise AssertionError(f"witness re-verification failed: {count} != {best}")
        return SearchResult(best, witness, True, space)
    if cfg.mode == "local":
        rng = np.random.default_rng(cfg.seed)
        budget = cfg.effective_budget()
        restarts = max(1, cfg.restarts)
        per_restart = max(1, budget // restarts)
        best = -1
        best_table: list[int] | None = None
        best_mask = 0
        evals = 0
        for r in range(restarts):
            rng = np.random.default_rng((cfg.seed, r))
            table = [int(v) for v in rng.integers(0, n, size=n * n)]
            cur, cur_mask = _max_independent_set(_sols_conflicts(table, n))
            sideways = 0
            it = 0
            while it < per_restart:
                if cfg.target is not None and cur >= cfg.target:
                    break
                e = int(rng.integers(0, n * n))
                val = int(rng.integers(0, n))
                if val == table[e]:
                    continue
                old = table[e]
                table[e] = val
                cand, cand_mask = _max_independent_set(_sols_conflicts(table, n))
                it += 1
                if cand > cur or (cand == cur and sideways < SIDEWAYS_CAP):
                    sideways = 0 if cand > cur else sideways + 1
                    cur, cur_mask = cand, cand_mask
                else:
                    table[e] = old
            evals += it
            if cur > best:
                best, best_table, best_mask = cur, list(table), cur_mask
        assert best_table is not None
        witness = _sols_witness(best_table, best_mask, n)
        count = count_solutions(sols_instance(), witness).count
        if count < best:
            raise AssertionError("witness re-verification fell short")
        return SearchResult(count, witness, False, evals)
    raise InvalidInstanceError(f"unsupported mode {cfg.mode!r} for the partial-square search")


def _sols_witness(table: list[int], cell_mask: int, n: int) -> Interpretation:
    """Decoder tables realising the admissible cell set (zeros elsewhere)."""
    h1 = [0] * (n * n)
    h2 = [0] * (n * n)
    h3 = [0] * (n * n)
    h4 = [0] * (n * n)
    for p in range(n * n):
        if not cell_mask & (1 << p):
            continue
        x, y = divmod(p, n)
        u = table[x * n + y]
        v = table[y * n + x]
        h1[u * n + y] = x
        h2[x * n + u] = y
        h3[u * n + v] = x
        h4[u * n + v] = y
    inst = sols_instance()
    return Interpretation(
        inst.signature,
        n,
        (
            ("f", tuple(table)),
            ("h1", tuple(h1)),
            ("h2", tuple(h2)),
            ("h3", tuple(h3)),
            ("h4", tuple(h4)),
        ),
    )


def rsols_decoders(f_interp: Interpretation) -> tuple[Interpretation, int]:
    """Division and section decoders for a quasigroup table.

    Returns decoder tables h1..h4 and r, the size of the superposition image
    {(f(x,y), f(y,x))}; exactly r input pairs then satisfy the full system,
    which is re-verified by counting before returning.
    """
    names = f_interp.signature.names
    if len(names) != 1 or f_interp.signature.arity(names[0]) != 2:
        raise InvalidInstanceError("expected an interpretation of one binary symbol")
    n = f_interp.alphabet_size
    table = f_interp.table(names[0])
    for i in range(n):
        row = {table[i * n + y] for y in range(n)}
        col = {table[x * n + i] for x in range(n)}
        if len(row) != n or len(col) != n:
            raise InvalidInstanceError("table is not a quasigroup")
    h1 = [0] * (n * n)
    h2 = [0] * (n * n)
    for x in range(n):
        for y in range(n):
            u = table[x * n + y]
            h1[u * n + y] = x
            h2[x * n + u] = y
    section: dict[tuple[int, int], tuple[int, int]] = {}
    for x in range(n):
        for y in range(n):
            pair = (table[x * n + y], table[y * n + x])
            if pair not in section:
                section[pair] = (x, y)
    h3 = [0] * (n * n)
    h4 = [0] * (n * n)
    for (u, v), (x, y) in section.items():
        h3[u * n + v] = x
        h4[u * n + v] = y
    r = len(section)
    inst = sols_instance()
    decoders = Interpretation(
        Signature((("h1", 2), ("h2", 2), ("h3", 2), ("h4", 2))),
        n,
        (("h1", tuple(h1)), ("h2", tuple(h2)), ("h3", tuple(h3)), ("h4", tuple(h4))),
    )
    combined = Interpretation(
        inst.signature,
        n,
        (("f", tuple(table)),) + decoders.tables,
    )
    count = count_solutions(inst, combined).count
    if count != r:
        raise AssertionError(f"decoder re-verification failed: {count} != {r}")
    return decoders, r


def sdos_universal_check(n: int, budget: int = DEFAULT_EXHAUSTIVE_BUDGET) -> bool:
    """Whether any single binary table satisfies the self-decoding identities
    at every input pair.  True only for the one-element alphabet."""
    space = n ** (n * n)
    if space > budget:
        raise BudgetError(f"{space} squares exceed budget {budget}")
    xs, ys = np.divmod(np.arange(n * n, dtype=np.int64), n)
    step = max(1, _CHUNK_CELLS // max(n * n, 1))
    for lo in range(0, space, step):
        hi = min(lo + step, space)
        g = np.arange(lo, hi, dtype=np.int64)
        powers = n ** np.arange(n * n - 1, -1, -1, dtype=np.int64)
        tables = (g[:, None] // powers[None, :]) % n
        rows = np.arange(hi - lo)[:, None]
        z = tables[rows, xs * n + ys]
        w = tables[rows, ys * n + xs]
        ok = tables[rows, z * n + ys] == xs
        ok &= tables[rows, xs * n + w] == ys
        ok &= tables[rows, z * n + w] == xs
        ok &= tables[rows, w * n + z] == ys
        if bool(ok.all(axis=1).any()):
            return True
    return False


# ---------------------------------------------------------------------------
# 0-1 ILP export (CPLEX LP text)
# ---------------------------------------------------------------------------


def export_ilp(inst: TermInstance, n: int, target: int | None = None) -> str:
    """0-1 programme whose optimum is the maximum solution count at size n.

    The instance is flattened first, so each equation's satisfaction at a
    fixed assignment is a single table-entry indicator; an assignment's
    satisfaction variable is tied to the conjunction of its indicators with
    the standard big-M-free rows.  Pass `target` to append the row
    (sum of satisfaction vars) >= target + 1 for infeasibility certification.
    """
    from .normalize import normalise

    nf, _ = normalise(inst)
    k = len(nf.variables)
    space = n**k
    if space > ILP_ASSIGNMENT_CAP:
        raise InvalidInstanceError(f"assignment space {space} exceeds the ILP export cap")
    used = sorted({eq.symbol for eq in nf.equations}, key=nf.signature.names.index)

    def entry_var(sym: str, entry: int, val: int) -> str:
        return f"x_{sym}_{entry}_{val}"

    rows: list[str] = []
    row_id = 0

    def add_row(expr: str):
        nonlocal row_id
        row_id += 1
        rows.append(f" r{row_id}: {expr}")

    binaries: list[str] = []
    for sym in used:
        arity = nf.signature.arity(sym)
        for entry in range(n**arity):
            names = [entry_var(sym, entry, val) for val in range(n)]
            binaries.extend(names)
            add_row(" + ".join(names) + " = 1")

    sat_vars: list[str] = []
    for a in range(space):
        digits = []
        rem = a
        for _ in range(k):
            digits.append(rem % n)
            rem //= n
        digits.reverse()
        required: dict[tuple[str, int], int] = {}
        conflict = False
        for eq in nf.equations:
            entry = 0
            for arg in eq.args:
                entry = entry * n + digits[arg]
            key = (eq.symbol, entry)
            val = digits[eq.rhs]
            if key in required and required[key] != val:
                conflict = True
                break
            required[key] = val
        sat = f"s_{a}"
        sat_vars.append(sat)
        binaries.append(sat)
        if conflict:
            add_row(f"{sat} = 0")
            continue
        names = [entry_var(sym, entry, val) for (sym, entry), val in sorted(required.items())]
        for name in names:
            add_row(f"{sat} - {name} <= 0")
        if names:
            add_row(f"{sat} - " + " - ".join(names) + f" >= {1 - len(names)}")
        else:
            add_row(f"{sat} >= 1")

    if target is not None:
        add_row(" + ".join(sat_vars) + f" >= {target + 1}")

    lines = ["\\ termcode 0-1 encoding of the maximum code size", "Maximize"]
    lines.extend(_wrap_sum("obj:", sat_vars))
    lines.append("Subject To")
    lines.extend(rows)
    lines.append("Bounds")
    lines.append("Binaries")
    for chunk in range(0, len(binaries), 8):
        lines.append(" " + " ".join(binaries[chunk : chunk + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _wrap_sum(head: str, names: list[str], limit: int = 200) -> list[str]:
    lines = [f" {head}"]
    current = lines[0]
    for i, name in enumerate(names):
        token = name if i == 0 else f"+ {name}"
        if len(current) + len(token) + 1 > limit:
            lines[-1] = current
            current = f"   {token}"
            lines.append(current)
        else:
            current = f"{current} {token}"
            lines[-1] = current
    return lines
