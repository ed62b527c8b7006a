"""Dependency digraphs and labelled dependency graphs of flat instances,
with DOT and TSV export."""

from __future__ import annotations

from dataclasses import dataclass

from .normalize import NormalFormInstance
from .terms import InvalidInstanceError

__all__ = [
    "DepDigraph",
    "LabelledDepGraph",
    "build_dep_digraph",
    "build_labelled_depgraph",
    "export_dot",
    "edge_tsv",
]


@dataclass(frozen=True)
class DepDigraph:
    """Digraph on the instance's variables: one edge per (argument, output)
    pair, parallel edges collapsed; sources are the undefined variables."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    sources: frozenset[int]

    def in_neighbours(self, v: int) -> tuple[int, ...]:
        return tuple(sorted({a for a, b in self.edges if b == v}))

    def index_of(self, name: str) -> int:
        return self.vertices.index(name)


@dataclass(frozen=True)
class LabelledDepGraph:
    """Bipartite-style graph: one variable vertex per variable (all sources)
    and one equation vertex per equation, labelled by its output variable.

    Vertices 0..k-1 are the variable vertices (labelled by themselves);
    vertices k.. are equation vertices e1, e2, ... in equation order.
    """

    vertex_names: tuple[str, ...]
    labels: tuple[int, ...]
    label_names: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    sources: frozenset[int]
    num_var_vertices: int

    def in_neighbours(self, v: int) -> tuple[int, ...]:
        return tuple(sorted({a for a, b in self.edges if b == v}))

    @property
    def equation_vertices(self) -> tuple[int, ...]:
        return tuple(range(self.num_var_vertices, len(self.vertex_names)))


def build_dep_digraph(inst: NormalFormInstance) -> DepDigraph:
    """Edges x_i -> x_j for every argument x_i of an equation defining x_j."""
    edges = set()
    for eq in inst.equations:
        for a in eq.args:
            edges.add((a, eq.rhs))
    return DepDigraph(inst.variables, tuple(sorted(edges)), inst.sources)


def build_labelled_depgraph(inst: NormalFormInstance) -> LabelledDepGraph:
    """One equation vertex per equation, fed by its argument variable vertices
    and labelled by its output variable; variable vertices are the sources."""
    k = len(inst.variables)
    names = list(inst.variables)
    labels = list(range(k))
    edges = set()
    for idx, eq in enumerate(inst.equations):
        e = k + idx
        names.append(f"e{idx + 1}")
        labels.append(eq.rhs)
        for a in eq.args:
            edges.add((a, e))
    return LabelledDepGraph(
        tuple(names),
        tuple(labels),
        inst.variables,
        tuple(sorted(edges)),
        frozenset(range(k)),
        k,
    )


def export_dot(graph: DepDigraph | LabelledDepGraph) -> str:
    """Deterministic DOT rendering: sources as boxes, labels as annotations."""
    lines = ["digraph depgraph {"]
    if isinstance(graph, DepDigraph):
        names = graph.vertices
        for i, name in enumerate(names):
            shape = "box" if i in graph.sources else "ellipse"
            lines.append(f'  "{name}" [shape={shape}];')
    elif isinstance(graph, LabelledDepGraph):
        names = graph.vertex_names
        for i, name in enumerate(names):
            shape = "box" if i in graph.sources else "ellipse"
            label = graph.label_names[graph.labels[i]]
            lines.append(f'  "{name}" [shape={shape}, label="{name}:{label}"];')
    else:
        raise InvalidInstanceError(f"not a dependency graph: {graph!r}")
    for a, b in graph.edges:
        lines.append(f'  "{names[a]}" -> "{names[b]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def edge_tsv(graph: DepDigraph | LabelledDepGraph) -> str:
    """Edge list `src<TAB>dst<TAB>label`, label being the head's label."""
    if isinstance(graph, DepDigraph):
        names = graph.vertices
        label = lambda v: names[v]
    else:
        names = graph.vertex_names
        label = lambda v: graph.label_names[graph.labels[v]]
    lines = [f"{names[a]}\t{names[b]}\t{label(b)}" for a, b in graph.edges]
    return "\n".join(lines) + ("\n" if lines else "")
