"""Exact-rational two-phase primal simplex with Bland's rule.

Small dense LPs only: maximize c.x subject to rows of sense <=, >= or =,
with x >= 0.  All arithmetic is over Fraction, so optima and solutions are
exact; Bland's pivoting rule guarantees termination under degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

__all__ = ["LinearProgram", "SimplexResult", "solve", "LE", "GE", "EQ"]

LE, GE, EQ = "<=", ">=", "="

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass
class LinearProgram:
    """maximize objective . x  s.t.  rows, x >= 0."""

    num_vars: int
    objective: list[Fraction]
    rows: list[tuple[list[Fraction], str, Fraction]] = field(default_factory=list)

    def add_row(self, coeffs: list[Fraction], sense: str, rhs: Fraction) -> None:
        if len(coeffs) != self.num_vars or sense not in (LE, GE, EQ):
            raise ValueError("malformed constraint row")
        self.rows.append((list(coeffs), sense, Fraction(rhs)))


@dataclass(frozen=True)
class SimplexResult:
    status: str  # optimal | infeasible | unbounded
    optimum: Fraction | None
    solution: list[Fraction] | None


class _Tableau:
    def __init__(self, lp: LinearProgram):
        n = lp.num_vars
        prepared = []
        slack_count = 0
        art_count = 0
        for coeffs, sense, rhs in lp.rows:
            coeffs = list(coeffs)
            if rhs < 0 or (rhs == 0 and sense == GE):
                coeffs = [-c for c in coeffs]
                rhs = -rhs
                sense = {LE: GE, GE: LE, EQ: EQ}[sense]
            prepared.append((coeffs, sense, rhs))
            slack_count += sense in (LE, GE)
            art_count += sense in (GE, EQ)

        self.n = n
        self.m = len(prepared)
        self.art_start = n + slack_count
        self.width = n + slack_count + art_count
        self.rows = []
        self.basis = []
        s_at, a_at = n, self.art_start
        for coeffs, sense, rhs in prepared:
            row = [_ZERO] * (self.width + 1)
            row[:n] = [Fraction(c) for c in coeffs]
            row[self.width] = rhs
            if sense == LE:
                row[s_at] = _ONE
                self.basis.append(s_at)
                s_at += 1
            else:
                if sense == GE:
                    row[s_at] = -_ONE
                    s_at += 1
                row[a_at] = _ONE
                self.basis.append(a_at)
                a_at += 1
            self.rows.append(row)

    def pivot(self, i: int, j: int, obj: list[Fraction]) -> None:
        row = self.rows[i]
        piv = row[j]
        if piv != _ONE:
            row = [v / piv for v in row]
            self.rows[i] = row
        nz = [idx for idx, v in enumerate(row) if v != 0]
        for k in range(self.m):
            rk = self.rows[k]
            f = rk[j]
            if k != i and f != 0:
                for idx in nz:
                    rk[idx] -= f * row[idx]
        f = obj[j]
        if f != 0:
            for idx in nz:
                obj[idx] -= f * row[idx]
        self.basis[i] = j

    def reduced_row(self, costs: list[Fraction]) -> list[Fraction]:
        obj = list(costs) + [_ZERO]
        for i, b in enumerate(self.basis):
            cb = obj[b]
            if cb != 0:
                obj = [a - cb * r for a, r in zip(obj, self.rows[i])]
        return obj

    def run(self, costs: list[Fraction], allowed: int) -> str:
        """Primal simplex over columns [0, allowed).

        Entering rule: Dantzig (largest reduced cost) until a long streak of
        degenerate pivots, then Bland's smallest-index rule, whose
        anti-cycling guarantee makes the whole run terminate.
        """
        obj = self.reduced_row(costs)
        bland = False
        streak = 0
        threshold = 16 + 2 * self.m
        while True:
            enter = -1
            if bland:
                for j in range(allowed):
                    if obj[j] > 0:
                        enter = j
                        break
            else:
                best_cost = _ZERO
                for j in range(allowed):
                    if obj[j] > best_cost:
                        best_cost = obj[j]
                        enter = j
            if enter < 0:
                return "optimal"
            leave = -1
            best = None
            for i in range(self.m):
                a = self.rows[i][enter]
                if a > 0:
                    ratio = self.rows[i][self.width] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return "unbounded"
            if not bland:
                streak = streak + 1 if best == 0 else 0
                bland = streak > threshold
            self.pivot(leave, enter, obj)


def solve(lp: LinearProgram) -> SimplexResult:
    t = _Tableau(lp)
    if t.width > t.art_start:
        phase1 = [_ZERO] * t.width
        for j in range(t.art_start, t.width):
            phase1[j] = -_ONE
        t.run(phase1, t.width)
        infeasibility = sum(
            (t.rows[i][t.width] for i in range(t.m) if t.basis[i] >= t.art_start),
            _ZERO,
        )
        if infeasibility != 0:
            return SimplexResult("infeasible", None, None)
        # Pivot degenerate artificials out where a real column is available;
        # rows that stay artificial-basic are redundant and harmless since
        # artificial columns are excluded from phase 2.
        dummy = [_ZERO] * (t.width + 1)
        for i in range(t.m):
            if t.basis[i] >= t.art_start:
                for j in range(t.art_start):
                    if t.rows[i][j] != 0:
                        t.pivot(i, j, dummy)
                        break

    costs = [_ZERO] * t.width
    costs[: t.n] = [Fraction(c) for c in lp.objective]
    status = t.run(costs, t.art_start)
    if status == "unbounded":
        return SimplexResult("unbounded", None, None)
    solution = [_ZERO] * t.n
    for i, b in enumerate(t.basis):
        if b < t.n:
            solution[b] = t.rows[i][t.width]
    optimum = sum((c * x for c, x in zip(lp.objective, solution)), _ZERO)
    return SimplexResult("optimal", optimum, solution)
