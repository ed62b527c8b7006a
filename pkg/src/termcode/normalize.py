"""The reduction pipeline: flattening, quotienting, collision closure,
functional completion, diversification, and the block embedding.

Every step preserves the exact solution count per interpretation (up to a
canonical bijection on assignments); the property tests exercise this by
brute force.  Flattening shares identical subterms (hash-consing), so the
defining equations form a term-DAG with one auxiliary variable per distinct
non-variable subterm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    App,
    Interpretation,
    InvalidInstanceError,
    Signature,
    Term,
    TermInstance,
    Var,
    render_term,
)

__all__ = [
    "FlatEq",
    "NormalFormInstance",
    "FlatSystem",
    "QuotientMap",
    "DiversifiedInstance",
    "flatten",
    "quotient_equalities",
    "eliminate_collisions",
    "normalise",
    "is_fnf",
    "functional_completion",
    "diversify",
    "block_embed",
]


@dataclass(frozen=True)
class FlatEq:
    """Depth-1 equation f(x_i1,...,x_ik) = x_j; constants have args == ()."""

    symbol: str
    args: tuple[int, ...]
    rhs: int


@dataclass(frozen=True)
class NormalFormInstance:
    """Flat instance: variables with provenance plus depth-1 equations.

    A variable is "original" when its provenance equals its own name;
    auxiliaries carry the subterm (or parent variable) they stand for.
    """

    signature: Signature
    variables: tuple[str, ...]
    provenance: tuple[str, ...]
    equations: tuple[FlatEq, ...]

    def __post_init__(self):
        if len(self.provenance) != len(self.variables):
            raise InvalidInstanceError("provenance length must match variables")
        for eq in self.equations:
            if self.signature.arity(eq.symbol) != len(eq.args):
                raise InvalidInstanceError(f"arity mismatch in flat equation for {eq.symbol!r}")
            for i in (*eq.args, eq.rhs):
                if not 0 <= i < len(self.variables):
                    raise InvalidInstanceError("variable index out of range in flat equation")

    @property
    def defined(self) -> frozenset[int]:
        return frozenset(eq.rhs for eq in self.equations)

    @property
    def sources(self) -> frozenset[int]:
        return frozenset(range(len(self.variables))) - self.defined

    @property
    def term_dag_flag(self) -> bool:
        """True iff per symbol all argument tuples are distinct (no collisions)."""
        seen = set()
        for eq in self.equations:
            key = (eq.symbol, eq.args)
            if key in seen:
                return False
            seen.add(key)
        return True

    def defining_equations(self, var: int) -> tuple[FlatEq, ...]:
        return tuple(eq for eq in self.equations if eq.rhs == var)

    def to_term_instance(self) -> TermInstance:
        eqs = tuple(
            (App(eq.symbol, tuple(Var(a) for a in eq.args)), Var(eq.rhs))
            for eq in self.equations
        )
        return TermInstance(self.signature, self.variables, eqs)


@dataclass(frozen=True)
class FlatSystem:
    """A flat instance together with explicit variable equalities."""

    core: NormalFormInstance
    equalities: tuple[tuple[int, int], ...]

    def to_term_instance(self) -> TermInstance:
        base = self.core.to_term_instance()
        extra = tuple((Var(i), Var(j)) for i, j in self.equalities)
        return TermInstance(base.signature, base.variables, base.equations + extra)


@dataclass(frozen=True)
class QuotientMap:
    """Map from pre-quotient variable indices to post-quotient indices."""

    mapping: tuple[int, ...]

    def __call__(self, index: int) -> int:
        return self.mapping[index]

    @staticmethod
    def identity(k: int) -> "QuotientMap":
        return QuotientMap(tuple(range(k)))

    def compose(self, later: "QuotientMap") -> "QuotientMap":
        """The map applying self first, then `later`."""
        return QuotientMap(tuple(later.mapping[m] for m in self.mapping))


@dataclass(frozen=True)
class DiversifiedInstance(NormalFormInstance):
    """Normal-form instance whose non-constant equations use pairwise distinct
    fresh symbols, with a back-map fresh -> (original symbol, equation index)."""

    back_map: tuple[tuple[str, str, int], ...] = field(default=())

    def original_of(self, fresh: str) -> tuple[str, int]:
        for name, orig, eq_idx in self.back_map:
            if name == fresh:
                return orig, eq_idx
        raise KeyError(fresh)


def _fresh_names(count: int, taken: set[str], prefix: str = "z") -> list[str]:
    names = []
    i = 1
    while len(names) < count:
        name = f"{prefix}{i}"
        if name not in taken:
            names.append(name)
            taken.add(name)
        i += 1
    return names


def flatten(inst: TermInstance) -> FlatSystem:
    """Introduce one auxiliary variable per distinct non-variable subterm.

    Each auxiliary gets a defining equation; each original equation s = t
    becomes the variable equality between the terms' handles.
    """
    variables = list(inst.variables)
    provenance = list(inst.variables)
    taken = set(inst.variables) | set(inst.signature.names)
    aux_of: dict[Term, int] = {}
    defining: list[FlatEq] = []

    def handle(t: Term) -> int:
        if isinstance(t, Var):
            return t.index
        if t in aux_of:
            return aux_of[t]
        arg_handles = tuple(handle(a) for a in t.args)
        name = _fresh_names(1, taken)[0]
        variables.append(name)
        provenance.append(render_term(t, inst.variables))
        idx = len(variables) - 1
        aux_of[t] = idx
        defining.append(FlatEq(t.symbol, arg_handles, idx))
        return idx

    equalities = []
    for lhs, rhs in inst.equations:
        equalities.append((handle(lhs), handle(rhs)))
    core = NormalFormInstance(inst.signature, tuple(variables), tuple(provenance), tuple(defining))
    return FlatSystem(core, tuple(equalities))


def quotient_equalities(
    inst: NormalFormInstance, equalities: tuple[tuple[int, int], ...]
) -> tuple[NormalFormInstance, QuotientMap]:
    """Merge variables related by the equalities and rewrite the equations.

    Class representatives prefer original-provenance variables, then the
    lowest index.  Equations that become identical after rewriting collapse.
    """
    k = len(inst.variables)
    parent = list(range(k))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in equalities:
        if not (0 <= i < k and 0 <= j < k):
            raise InvalidInstanceError("equality relates unknown variables")
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    classes: dict[int, list[int]] = {}
    for i in range(k):
        classes.setdefault(find(i), []).append(i)

    def representative(members: list[int]) -> int:
        originals = [i for i in members if inst.provenance[i] == inst.variables[i]]
        return min(originals) if originals else min(members)

    rep_of_root = {root: representative(members) for root, members in classes.items()}
    reps = sorted(rep_of_root.values())
    new_index = {rep: pos for pos, rep in enumerate(reps)}
    mapping = tuple(new_index[rep_of_root[find(i)]] for i in range(k))

    rewritten = []
    seen = set()
    for eq in inst.equations:
        new_eq = FlatEq(eq.symbol, tuple(mapping[a] for a in eq.args), mapping[eq.rhs])
        if new_eq not in seen:
            seen.add(new_eq)
            rewritten.append(new_eq)
    out = NormalFormInstance(
        inst.signature,
        tuple(inst.variables[r] for r in reps),
        tuple(inst.provenance[r] for r in reps),
        tuple(rewritten),
    )
    return out, QuotientMap(mapping)


def eliminate_collisions(inst: NormalFormInstance) -> tuple[NormalFormInstance, QuotientMap]:
    """Quotient away left-hand collisions until the no-collision property holds.

    Two equations sharing (symbol, argument tuple) force their right-hand
    sides equal; each round merges all such pairs and strictly decreases the
    variable count, so the loop terminates.
    """
    qmap = QuotientMap.identity(len(inst.variables))
    while True:
        by_lhs: dict[tuple[str, tuple[int, ...]], list[int]] = {}
        for eq in inst.equations:
            by_lhs.setdefault((eq.symbol, eq.args), []).append(eq.rhs)
        forced = []
        for rhss in by_lhs.values():
            forced.extend((rhss[0], other) for other in rhss[1:])
        if not forced:
            return inst, qmap
        inst, step = quotient_equalities(inst, tuple(forced))
        qmap = qmap.compose(step)


def normalise(inst: TermInstance) -> tuple[NormalFormInstance, QuotientMap]:
    """Flatten, quotient the flattening equalities, then close collisions.

    The returned map sends flat-stage variable indices (originals first, then
    auxiliaries) to variables of the final instance, which always satisfies
    the no-collision property.
    """
    flat = flatten(inst)
    nf, q1 = quotient_equalities(flat.core, flat.equalities)
    nf, q2 = eliminate_collisions(nf)
    assert nf.term_dag_flag
    return nf, q1.compose(q2)


def is_fnf(inst: NormalFormInstance) -> bool:
    """True iff every defined variable has exactly one defining equation."""
    counts: dict[int, int] = {}
    for eq in inst.equations:
        counts[eq.rhs] = counts.get(eq.rhs, 0) + 1
    return all(c == 1 for c in counts.values())


def functional_completion(inst: NormalFormInstance) -> FlatSystem:
    """Redirect extra defining equations to fresh copy variables.

    For a variable defined r >= 2 times, the first defining equation is kept;
    each further one writes to a fresh copy x@l, recorded equal to x.  The
    returned core is in functional normal form.
    """
    variables = list(inst.variables)
    provenance = list(inst.provenance)
    taken = set(inst.variables) | set(inst.signature.names)
    seen_rhs: dict[int, int] = {}
    equations = []
    equalities = []
    for eq in inst.equations:
        times = seen_rhs.get(eq.rhs, 0)
        seen_rhs[eq.rhs] = times + 1
        if times == 0:
            equations.append(eq)
            continue
        base = inst.variables[eq.rhs]
        copy_name = f"{base}@{times}"
        while copy_name in taken:
            copy_name += "'"
        taken.add(copy_name)
        variables.append(copy_name)
        provenance.append(base)
        copy_idx = len(variables) - 1
        equations.append(FlatEq(eq.symbol, eq.args, copy_idx))
        equalities.append((copy_idx, eq.rhs))
    core = NormalFormInstance(inst.signature, tuple(variables), tuple(provenance), tuple(equations))
    assert is_fnf(core)
    return FlatSystem(core, tuple(equalities))


def diversify(inst: NormalFormInstance) -> DiversifiedInstance:
    """Give each non-constant equation its own fresh symbol <orig>@<eq-index>.

    Constant equations keep their symbol.  The back-map records, for each
    fresh symbol, the original symbol and the 0-based equation index.
    """
    taken = set(inst.variables) | set(inst.signature.names)
    new_symbols: list[tuple[str, int]] = []
    back_map = []
    equations = []
    for idx, eq in enumerate(inst.equations):
        arity = inst.signature.arity(eq.symbol)
        if arity == 0:
            if not any(name == eq.symbol for name, _ in new_symbols):
                new_symbols.append((eq.symbol, 0))
            equations.append(eq)
            continue
        fresh = f"{eq.symbol}@{idx + 1}"
        while fresh in taken:
            fresh += "'"
        taken.add(fresh)
        new_symbols.append((fresh, arity))
        back_map.append((fresh, eq.symbol, idx))
        equations.append(FlatEq(fresh, eq.args, eq.rhs))
    return DiversifiedInstance(
        Signature(tuple(new_symbols)),
        inst.variables,
        inst.provenance,
        tuple(equations),
        tuple(back_map),
    )


def block_embed(div_interp: Interpretation, nf: NormalFormInstance, n: int) -> Interpretation:
    """Turn an interpretation of the diversified signature on m letters into an
    interpretation of the original signature on n >= k*m letters.

    The alphabet is split into k blocks of size m (one per variable of the
    flat instance, leftovers unconstrained); each equation's symbol simulates
    its diversified table on the corresponding product block.  Distinct
    equations with the same symbol land on disjoint blocks thanks to the
    no-collision property.  Unconstrained entries are 0.
    """
    if not nf.term_dag_flag:
        raise InvalidInstanceError("block embedding requires the no-collision property")
    div = diversify(nf)
    if not div_interp.covers(div.signature):
        raise InvalidInstanceError("interpretation does not cover the diversified signature")
    k = len(nf.variables)
    m = div_interp.alphabet_size
    if k < 1 or n < k * m:
        raise InvalidInstanceError(f"need n >= k*m (n={n}, k={k}, m={m})")

    def phi(block: int, a: int) -> int:
        return block * m + a

    tables: dict[str, list[int]] = {}
    for name, arity in nf.signature.symbols:
        tables[name] = [0] * (n**arity)

    fresh_of_eq = {eq_idx: fresh for fresh, _, eq_idx in div.back_map}
    for idx, eq in enumerate(nf.equations):
        arity = nf.signature.arity(eq.symbol)
        if arity == 0:
            tables[eq.symbol][0] = phi(eq.rhs, div_interp.table(eq.symbol)[0])
            continue
        small = div_interp.table(fresh_of_eq[idx])
        table = tables[eq.symbol]
        for t_idx in range(m**arity):
            rem = t_idx
            digits = [0] * arity
            for p in range(arity - 1, -1, -1):
                digits[p] = rem % m
                rem //= m
            big_idx = 0
            for p in range(arity):
                big_idx = big_idx * n + phi(eq.args[p], digits[p])
            table[big_idx] = phi(eq.rhs, small[t_idx])
    return Interpretation(
        nf.signature,
        n,
        tuple((name, tuple(values)) for name, values in tables.items()),
    )
