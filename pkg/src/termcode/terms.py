"""Term systems: data model, the instance DSL, interpretations, and exact solution counting.

A term-coding instance is a finite list of equations between terms over a fixed
signature and an ordered variable list.  Fixing an interpretation of the symbols
on the alphabet {0..n-1} turns each equation into a constraint on assignments;
`count_solutions` counts the assignments satisfying all of them by full
enumeration (vectorised in chunks, exact integer result).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "TermcodeError",
    "ParseError",
    "InvalidInstanceError",
    "BudgetError",
    "Signature",
    "Term",
    "Var",
    "App",
    "TermInstance",
    "Interpretation",
    "CodeReport",
    "parse_instance",
    "format_instance",
    "render_term",
    "evaluate_term",
    "count_solutions",
    "parse_interpretation",
    "format_interpretation",
    "tuple_index",
    "interpretation_space",
    "interpretation_from_index",
    "random_interpretation",
]

# Enumeration of assignment/table spaces is refused beyond this many elements.
MAX_ENUMERATION = 1 << 62


class TermcodeError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(TermcodeError):
    """DSL parse failure, carrying a position and a machine-checkable code.

    Codes: ``syntax``, ``arity``, ``undeclared-symbol``, ``undeclared-variable``,
    ``duplicate``.
    """

    def __init__(self, message: str, line: int, col: int, code: str = "syntax"):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.code = code


class InvalidInstanceError(TermcodeError):
    """A structurally invalid instance, interpretation, or mismatched pair."""


class BudgetError(TermcodeError):
    """An enumeration would exceed the configured budget."""


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """Finite first-order signature: symbol names with fixed arities (0 = constant)."""

    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = {}
        for name, arity in self.symbols:
            if name in seen:
                raise InvalidInstanceError(f"duplicate symbol {name!r}")
            if arity < 0:
                raise InvalidInstanceError(f"negative arity for {name!r}")
            seen[name] = arity
        object.__setattr__(self, "_arity", seen)

    def arity(self, name: str) -> int:
        try:
            return self._arity[name]
        except KeyError:
            raise InvalidInstanceError(f"unknown symbol {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._arity

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)


class Term:
    """Base class for terms; concrete terms are Var or App."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    index: int


@dataclass(frozen=True)
class App(Term):
    symbol: str
    args: tuple[Term, ...] = ()


def _check_term(t: Term, signature: Signature, num_vars: int) -> None:
    if isinstance(t, Var):
        if not 0 <= t.index < num_vars:
            raise InvalidInstanceError(f"variable index {t.index} out of range")
        return
    if isinstance(t, App):
        if t.symbol not in signature:
            raise InvalidInstanceError(f"unknown symbol {t.symbol!r}")
        if signature.arity(t.symbol) != len(t.args):
            raise InvalidInstanceError(
                f"symbol {t.symbol!r} expects {signature.arity(t.symbol)} "
                f"arguments, got {len(t.args)}"
            )
        for a in t.args:
            _check_term(a, signature, num_vars)
        return
    raise InvalidInstanceError(f"not a term: {t!r}")


@dataclass(frozen=True)
class TermInstance:
    """A finite system of term equations over an ordered variable list."""

    signature: Signature
    variables: tuple[str, ...]
    equations: tuple[tuple[Term, Term], ...]

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise InvalidInstanceError("duplicate variable name")
        clash = set(self.variables) & set(self.signature.names)
        if clash:
            raise InvalidInstanceError(f"name used as both variable and symbol: {sorted(clash)}")
        for lhs, rhs in self.equations:
            _check_term(lhs, self.signature, len(self.variables))
            _check_term(rhs, self.signature, len(self.variables))

    @property
    def num_variables(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class Interpretation:
    """Total function tables for every symbol of a signature on {0..n-1}.

    Tables are flat, in row-major tuple order (last argument fastest); a
    constant's table has a single entry.
    """

    signature: Signature
    alphabet_size: int
    tables: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self):
        n = self.alphabet_size
        if n < 1:
            raise InvalidInstanceError("alphabet size must be >= 1")
        by_name = {}
        for name, table in self.tables:
            arity = self.signature.arity(name)
            if len(table) != n**arity:
                raise InvalidInstanceError(
                    f"table for {name!r} has {len(table)} entries, expected {n**arity}"
                )
            if any(not 0 <= v < n for v in table):
                raise InvalidInstanceError(f"table entry out of range for {name!r}")
            if name in by_name:
                raise InvalidInstanceError(f"duplicate table for {name!r}")
            by_name[name] = table
        missing = [name for name in self.signature.names if name not in by_name]
        if missing:
            raise InvalidInstanceError(f"missing tables for {missing}")
        object.__setattr__(self, "_by_name", by_name)

    def table(self, name: str) -> tuple[int, ...]:
        return self._by_name[name]

    def apply(self, name: str, args: tuple[int, ...]) -> int:
        return self._by_name[name][tuple_index(args, self.alphabet_size)]

    def covers(self, signature: Signature) -> bool:
        return all(
            name in self.signature and self.signature.arity(name) == arity
            for name, arity in signature.symbols
        )


def tuple_index(args: tuple[int, ...], n: int) -> int:
    """Row-major index of an argument tuple (last argument fastest)."""
    idx = 0
    for a in args:
        idx = idx * n + a
    return idx


@dataclass(frozen=True)
class CodeReport:
    """Exact solution count of an instance under one interpretation."""

    count: int
    n: int
    num_variables: int
    normalized_exponent: float | None

    @staticmethod
    def from_count(count: int, n: int, num_variables: int) -> "CodeReport":
        exponent = None
        if n >= 2 and count > 0:
            exponent = math.log(count) / math.log(n)
        return CodeReport(count, n, num_variables, exponent)


# ---------------------------------------------------------------------------
# DSL parser
# ---------------------------------------------------------------------------

_PUNCT = {"(", ")", ",", ";", "/", "="}


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    """Return (kind, value, line, col) tokens; kinds: ident, nat, punct."""
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch in _PUNCT:
            tokens.append(("punct", ch, line, col))
            col += 1
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("nat", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_@"):
                j += 1
            tokens.append(("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables: dict[str, int] = {}
        self.symbols: dict[str, int] = {}
        self.equations: list[tuple[Term, Term]] = []

    def _peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return ("eof", "", *self._eof_pos())

    def _eof_pos(self):
        if self.tokens:
            _, value, line, col = self.tokens[-1]
            return line, col + len(value)
        return 1, 1

    def _next(self):
        tok = self._peek()
        self.pos += 1
        return tok

    def _expect(self, kind: str, value: str | None = None):
        tok = self._next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, got {tok[1]!r}", tok[2], tok[3])
        return tok

    def _declare(self, name: str, line: int, col: int, *, arity: int | None):
        if name in self.variables or name in self.symbols:
            raise ParseError(f"name {name!r} already declared", line, col, code="duplicate")
        if arity is None:
            self.variables[name] = len(self.variables)
        else:
            self.symbols[name] = arity

    def parse(self) -> TermInstance:
        while self._peek()[0] != "eof":
            kind, value, line, col = self._next()
            if kind != "ident":
                raise ParseError(f"expected declaration, got {value!r}", line, col)
            if value == "var":
                names = []
                while self._peek()[0] == "ident":
                    names.append(self._next())
                if not names:
                    tok = self._peek()
                    raise ParseError("expected variable name", tok[2], tok[3])
                self._expect("punct", ";")
                for _, name, nline, ncol in names:
                    self._declare(name, nline, ncol, arity=None)
            elif value == "fun":
                _, name, nline, ncol = self._expect("ident")
                self._expect("punct", "/")
                _, nat, *_ = self._expect("nat")
                self._expect("punct", ";")
                self._declare(name, nline, ncol, arity=int(nat))
            elif value == "const":
                _, name, nline, ncol = self._expect("ident")
                self._expect("punct", ";")
                self._declare(name, nline, ncol, arity=0)
            elif value == "eq":
                lhs = self._term()
                self._expect("punct", "=")
                rhs = self._term()
                self._expect("punct", ";")
                self.equations.append((lhs, rhs))
            else:
                raise ParseError(f"expected declaration, got {value!r}", line, col)
        signature = Signature(tuple(self.symbols.items()))
        return TermInstance(signature, tuple(self.variables), tuple(self.equations))

    def _term(self) -> Term:
        tok = self._next()
        if tok[0] != "ident":
            raise ParseError(f"expected term, got {tok[1]!r}", tok[2], tok[3])
        _, name, line, col = tok
        if self._peek()[:2] == ("punct", "("):
            self._next()
            args = [self._term()]
            while self._peek()[:2] == ("punct", ","):
                self._next()
                args.append(self._term())
            self._expect("punct", ")")
            if name not in self.symbols:
                raise ParseError(f"undeclared symbol {name!r}", line, col, code="undeclared-symbol")
            if self.symbols[name] != len(args):
                raise ParseError(
                    f"symbol {name!r} has arity {self.symbols[name]}, got {len(args)} arguments",
                    line,
                    col,
                    code="arity",
                )
            return App(name, tuple(args))
        if name in self.variables:
            return Var(self.variables[name])
        if name in self.symbols:
            if self.symbols[name] != 0:
                raise ParseError(
                    f"symbol {name!r} has arity {self.symbols[name]}, got 0 arguments",
                    line,
                    col,
                    code="arity",
                )
            return App(name, ())
        raise ParseError(f"undeclared variable {name!r}", line, col, code="undeclared-variable")


def parse_instance(text: str) -> TermInstance:
    """Parse DSL text into a TermInstance (see the grammar in the README)."""
    return _Parser(text).parse()


def render_term(t: Term, variables: tuple[str, ...]) -> str:
    if isinstance(t, Var):
        return variables[t.index]
    if not t.args:
        return t.symbol
    return f"{t.symbol}({','.join(render_term(a, variables) for a in t.args)})"


def format_instance(inst: TermInstance) -> str:
    """Canonical DSL text; parse(format_instance(i)) == i."""
    lines = []
    if inst.variables:
        lines.append(f"var {' '.join(inst.variables)};")
    for name, arity in inst.signature.symbols:
        if arity == 0:
            lines.append(f"const {name};")
        else:
            lines.append(f"fun {name}/{arity};")
    for lhs, rhs in inst.equations:
        lines.append(f"eq {render_term(lhs, inst.variables)} = {render_term(rhs, inst.variables)};")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Interpretation files and enumeration
# ---------------------------------------------------------------------------


def parse_interpretation(text: str, signature: Signature) -> Interpretation:
    """Parse the interpretation file format (`n=<nat>` header, one line per symbol)."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].replace(" ", "").startswith("n="):
        raise InvalidInstanceError("interpretation file must start with 'n=<nat>'")
    try:
        n = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise InvalidInstanceError("malformed alphabet size header") from None
    tables = []
    for ln in lines[1:]:
        if ":" not in ln:
            raise InvalidInstanceError(f"malformed table line: {ln!r}")
        name, rest = ln.split(":", 1)
        name = name.strip()
        try:
            values = tuple(int(v) for v in rest.split())
        except ValueError:
            raise InvalidInstanceError(f"malformed table values for {name!r}") from None
        tables.append((name, values))
    return Interpretation(signature, n, tuple(tables))


def format_interpretation(interp: Interpretation) -> str:
    lines = [f"n={interp.alphabet_size}"]
    for name, _ in interp.signature.symbols:
        lines.append(f"{name}: {' '.join(str(v) for v in interp.table(name))}")
    return "\n".join(lines) + "\n"


def interpretation_space(signature: Signature, n: int) -> int:
    """Number of interpretations of the signature on an n-element alphabet."""
    total = 1
    for _, arity in signature.symbols:
        total *= n ** (n**arity)
    return total


def interpretation_from_index(signature: Signature, n: int, index: int) -> Interpretation:
    """Decode the odometer index (symbols in signature order, entries row-major,
    last entry fastest) into an Interpretation."""
    total = interpretation_space(signature, n)
    if not 0 <= index < total:
        raise InvalidInstanceError(f"interpretation index {index} out of range")
    tables = []
    for name, arity in reversed(signature.symbols):
        size = n**arity
        count = n**size
        t_idx = index % count
        index //= count
        entries = []
        for _ in range(size):
            entries.append(t_idx % n)
            t_idx //= n
        tables.append((name, tuple(reversed(entries))))
    return Interpretation(signature, n, tuple(reversed(tables)))


def random_interpretation(signature: Signature, n: int, rng: np.random.Generator) -> Interpretation:
    tables = []
    for name, arity in signature.symbols:
        tables.append((name, tuple(int(v) for v in rng.integers(0, n, size=n**arity))))
    return Interpretation(signature, n, tuple(tables))


# ---------------------------------------------------------------------------
# Evaluation and counting
# ---------------------------------------------------------------------------


def evaluate_term(t: Term, interp: Interpretation, assignment: tuple[int, ...]) -> int:
    """Bottom-up evaluation of one term at one assignment."""
    if isinstance(t, Var):
        return assignment[t.index]
    args = tuple(evaluate_term(a, interp, assignment) for a in t.args)
    return interp.apply(t.symbol, args)


class CompiledInstance:
    """Instance compiled for vectorised evaluation.

    Distinct subterms are shared (structural equality), so each is evaluated
    once per assignment batch.  Nodes are in bottom-up order: ('var', i) or
    ('app', symbol, arg node ids).
    """

    def __init__(self, inst: TermInstance):
        self.instance = inst
        self.nodes: list[tuple] = []
        self.node_of: dict[Term, int] = {}
        self.equation_nodes: list[tuple[int, int]] = []
        for lhs, rhs in inst.equations:
            self.equation_nodes.append((self._add(lhs), self._add(rhs)))
        self.symbols_used = tuple(
            dict.fromkeys(node[1] for node in self.nodes if node[0] == "app")
        )

    def _add(self, t: Term) -> int:
        if t in self.node_of:
            return self.node_of[t]
        if isinstance(t, Var):
            node = ("var", t.index)
        else:
            node = ("app", t.symbol, tuple(self._add(a) for a in t.args))
        self.nodes.append(node)
        self.node_of[t] = len(self.nodes) - 1
        return self.node_of[t]


def assignment_columns(n: int, v: int, lo: int, hi: int) -> np.ndarray:
    """Columns (v, hi-lo) of assignment digits for indices [lo, hi).

    Assignment index i encodes the tuple in row-major order, last variable
    fastest, matching the table entry order.
    """
    idx = np.arange(lo, hi, dtype=np.int64)
    cols = np.empty((v, hi - lo), dtype=np.int64)
    for j in range(v):
        power = n ** (v - 1 - j)
        cols[j] = (idx // power) % n
    return cols


def count_solutions(inst: TermInstance, interp: Interpretation, chunk: int = 1 << 20) -> CodeReport:
    """Count assignments satisfying every equation, by full enumeration.

    The count is an exact Python integer accumulated across chunks.
    """
    if not interp.covers(inst.signature):
        raise InvalidInstanceError("interpretation does not cover the instance's signature")
    n = interp.alphabet_size
    v = inst.num_variables
    space = n**v
    if space > MAX_ENUMERATION:
        raise InvalidInstanceError(f"assignment space {n}^{v} too large to enumerate")
    compiled = CompiledInstance(inst)
    tables = {name: np.asarray(interp.table(name), dtype=np.int64) for name in compiled.symbols_used}
    count = 0
    for lo in range(0, space, chunk):
        hi = min(lo + chunk, space)
        cols = assignment_columns(n, v, lo, hi)
        values = _eval_batch(compiled, tables, cols, n)
        ok = np.ones(hi - lo, dtype=bool)
        for lhs, rhs in compiled.equation_nodes:
            ok &= values[lhs] == values[rhs]
        count += int(np.count_nonzero(ok))
    return CodeReport.from_count(count, n, v)


def _eval_batch(compiled: CompiledInstance, tables: Mapping[str, np.ndarray], cols: np.ndarray, n: int) -> list:
    """Evaluate all compiled nodes over assignment columns for one interpretation."""
    values: list = []
    batch = cols.shape[1]
    for node in compiled.nodes:
        if node[0] == "var":
            values.append(cols[node[1]])
        else:
            _, symbol, arg_ids = node
            idx = None
            for a in arg_ids:
                idx = values[a].copy() if idx is None else idx * n + values[a]
            if idx is None:
                idx = np.zeros(batch, dtype=np.int64)
            values.append(tables[symbol][idx])
    return values
