"""Shannon-polymatroid upper bounds via an exact-rational LP.

One rational variable h(S) per subset S of the ground set (variables or
labels), constrained by the elemental polymatroid inequalities, per-singleton
normalisation h({i}) <= 1, and one functional-dependency equality per
equation: knowing an equation's arguments pins its output.  The optimum of
max h(ground) upper-bounds the normalised log of any achievable code size.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction

from . import simplex
from .depgraph import DepDigraph, LabelledDepGraph, build_labelled_depgraph
from .normalize import NormalFormInstance, diversify, normalise
from .terms import InvalidInstanceError, TermInstance

__all__ = [
    "LPConstraint",
    "PolymatroidLP",
    "BoundReport",
    "build_lp",
    "solve_lp",
    "bound_instance",
    "format_lp_cplex",
    "format_bound_report",
]

DEFAULT_GROUND_CAP = 12


@dataclass(frozen=True)
class LPConstraint:
    """sum of coeff * h(mask) {<=,>=,=} rhs."""

    coeffs: tuple[tuple[int, Fraction], ...]
    sense: str
    rhs: Fraction
    kind: str  # zero | monotone | submodular | normalise | functional


@dataclass(frozen=True)
class PolymatroidLP:
    """Variables h(S) for S a bitmask over the ground set; maximise h(full)."""

    ground: tuple[str, ...]
    constraints: tuple[LPConstraint, ...]
    graph_hash: str

    @property
    def full_mask(self) -> int:
        return (1 << len(self.ground)) - 1

    @property
    def num_variables(self) -> int:
        return 1 << len(self.ground)


@dataclass(frozen=True)
class BoundReport:
    """Exact LP optimum with its verified primal certificate."""

    optimum: Fraction
    certificate: tuple[Fraction, ...]  # indexed by subset bitmask
    ground: tuple[str, ...]
    graph_hash: str


def _graph_hash(graph: DepDigraph | LabelledDepGraph) -> str:
    if isinstance(graph, DepDigraph):
        payload = repr(("dep", graph.vertices, graph.edges, tuple(sorted(graph.sources))))
    else:
        payload = repr(
            (
                "labelled",
                graph.vertex_names,
                graph.labels,
                graph.edges,
                tuple(sorted(graph.sources)),
            )
        )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _functional_pairs(graph: DepDigraph | LabelledDepGraph) -> list[tuple[int, int]]:
    """(argument mask, output element) per rule vertex, over the ground set."""
    pairs = []
    if isinstance(graph, DepDigraph):
        for v in range(len(graph.vertices)):
            if v in graph.sources:
                continue
            mask = 0
            for u in graph.in_neighbours(v):
                mask |= 1 << u
            pairs.append((mask, v))
    else:
        for e in graph.equation_vertices:
            mask = 0
            for u in graph.in_neighbours(e):
                mask |= 1 << graph.labels[u]
            pairs.append((mask, graph.labels[e]))
    return pairs


def build_lp(graph: DepDigraph | LabelledDepGraph, cap: int = DEFAULT_GROUND_CAP) -> PolymatroidLP:
    """Elemental Shannon constraints plus the graph's functional dependencies.

    Ground set: the digraph's vertices, or the labelled graph's labels.
    """
    ground = graph.vertices if isinstance(graph, DepDigraph) else graph.label_names
    g = len(ground)
    if g > cap:
        raise InvalidInstanceError(f"ground set of size {g} exceeds the cap {cap}")
    one = Fraction(1)
    full = (1 << g) - 1
    cons: list[LPConstraint] = []
    cons.append(LPConstraint(((0, one),), simplex.EQ, Fraction(0), "zero"))
    for i in range(g):
        cons.append(
            LPConstraint(
                ((full, one), (full ^ (1 << i), -one)), simplex.GE, Fraction(0), "monotone"
            )
        )
    for i in range(g):
        for j in range(i + 1, g):
            ij = (1 << i) | (1 << j)
            rest = full ^ ij
            s = rest
            while True:
                cons.append(
                    LPConstraint(
                        (
                            (s | (1 << i), one),
                            (s | (1 << j), one),
                            (s | ij, -one),
                            (s, -one),
                        ),
                        simplex.GE,
                        Fraction(0),
                        "submodular",
                    )
                )
                if s == 0:
                    break
                s = (s - 1) & rest
    for i in range(g):
        cons.append(LPConstraint(((1 << i, one),), simplex.LE, Fraction(1), "normalise"))
    for mask, out in _functional_pairs(graph):
        if mask & (1 << out):
            continue  # output among its own arguments: vacuous
        cons.append(
            LPConstraint(
                ((mask | (1 << out), one), (mask, -one)), simplex.EQ, Fraction(0), "functional"
            )
        )
    return PolymatroidLP(tuple(ground), tuple(cons), _graph_hash(graph))


def solve_lp(lp: PolymatroidLP) -> BoundReport:
    """Exact optimum of max h(full).  The returned certificate is re-checked
    against every constraint before being reported.

    Equality constraints here only ever identify two variables (or pin h(0)),
    so they are eliminated by aliasing before the simplex runs; the tableau
    then starts feasible at h == 0.
    """
    size = lp.num_variables
    parent = list(range(size))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for con in lp.constraints:
        if con.sense != simplex.EQ:
            continue
        if con.kind == "zero":
            continue
        if len(con.coeffs) != 2 or con.rhs != 0:
            raise InvalidInstanceError("unsupported equality constraint shape")
        (a, ca), (b, cb) = con.coeffs
        if ca != -cb:
            raise InvalidInstanceError("unsupported equality constraint shape")
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    zero_class = find(0)
    reps = sorted({find(x) for x in range(size)} - {zero_class})
    col = {r: i for i, r in enumerate(reps)}

    objective = [Fraction(0)] * len(reps)
    full_rep = find(lp.full_mask)
    if full_rep != zero_class:
        objective[col[full_rep]] = Fraction(1)

    prog = simplex.LinearProgram(len(reps), objective)
    for con in lp.constraints:
        if con.sense == simplex.EQ:
            continue
        row = [Fraction(0)] * len(reps)
        for mask, coeff in con.coeffs:
            r = find(mask)
            if r != zero_class:
                row[col[r]] += coeff
        if any(row):
            prog.add_row(row, con.sense, con.rhs)
        elif not _trivially_true(Fraction(0), con.sense, con.rhs):
            raise InvalidInstanceError("aliasing produced an unsatisfiable constraint")

    if len(reps) == 0:
        values = tuple(Fraction(0) for _ in range(size))
        report = BoundReport(Fraction(0), values, lp.ground, lp.graph_hash)
        _verify(lp, report)
        return report

    result = simplex.solve(prog)
    if result.status != "optimal":
        raise InvalidInstanceError(f"entropy LP unexpectedly {result.status}")
    values = tuple(
        Fraction(0) if find(mask) == zero_class else result.solution[col[find(mask)]]
        for mask in range(size)
    )
    report = BoundReport(result.optimum, values, lp.ground, lp.graph_hash)
    _verify(lp, report)
    return report


def _trivially_true(lhs: Fraction, sense: str, rhs: Fraction) -> bool:
    if sense == simplex.LE:
        return lhs <= rhs
    if sense == simplex.GE:
        return lhs >= rhs
    return lhs == rhs


def _verify(lp: PolymatroidLP, report: BoundReport) -> None:
    values = report.certificate
    for con in lp.constraints:
        lhs = sum((coeff * values[mask] for mask, coeff in con.coeffs), Fraction(0))
        if not _trivially_true(lhs, con.sense, con.rhs):
            raise AssertionError(f"certificate violates a {con.kind} constraint")
    if values[lp.full_mask] != report.optimum:
        raise AssertionError("certificate does not attain the reported optimum")


def bound_instance(
    inst: TermInstance, labelled: bool = True, cap: int = DEFAULT_GROUND_CAP
) -> BoundReport:
    """Upper estimate of the instance's growth exponent: normalise, diversify,
    read off the (labelled) dependency graph, solve the entropy LP."""
    nf, _ = normalise(inst)
    return bound_normal_form(nf, labelled=labelled, cap=cap)


def bound_normal_form(
    nf: NormalFormInstance, labelled: bool = True, cap: int = DEFAULT_GROUND_CAP
) -> BoundReport:
    from .depgraph import build_dep_digraph

    div = diversify(nf)
    graph = build_labelled_depgraph(div) if labelled else build_dep_digraph(div)
    return solve_lp(build_lp(graph, cap=cap))


def format_lp_cplex(lp: PolymatroidLP) -> str:
    """CPLEX-LP text: objective max h_<fullmask>, variables h_<bitmask>."""
    lines = ["\\ termcode polymatroid entropy LP", "Maximize", f" obj: h_{lp.full_mask}", "Subject To"]
    for i, con in enumerate(lp.constraints, 1):
        terms = []
        for mask, coeff in con.coeffs:
            if coeff == 1:
                terms.append(f"+ h_{mask}")
            elif coeff == -1:
                terms.append(f"- h_{mask}")
            elif coeff > 0:
                terms.append(f"+ {coeff} h_{mask}")
            else:
                terms.append(f"- {-coeff} h_{mask}")
        expr = " ".join(terms).lstrip("+ ")
        lines.append(f" c{i}: {expr} {con.sense} {con.rhs}")
    lines.append("Bounds")
    lines.append("End")
    return "\n".join(lines) + "\n"


def format_bound_report(report: BoundReport, certificate: bool = False) -> str:
    lines = [
        f"optimum\t{report.optimum}",
        f"ground\t{','.join(report.ground)}",
        f"graph\t{report.graph_hash}",
    ]
    if certificate:
        for mask, value in enumerate(report.certificate):
            lines.append(f"h_{mask}\t{value}")
    return "\n".join(lines) + "\n"
