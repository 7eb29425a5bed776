"""Exact two-phase simplex over the rationals with Bland's rule.

Solves  min c.x  s.t.  A_ge x >= b_ge,  A_eq x = b_eq,  x >= 0  without
any floating point: the tableau holds Fractions throughout, so vertices
and objectives are exact and Bland's pivoting rule guarantees
termination.  Problem sizes in this package are tiny (a handful of
weight variables, at most a few hundred subspace constraints), so no
sparsity or revised-simplex machinery is warranted.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Sequence


class LPResult(NamedTuple):
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None
    objective: Fraction | None


def _pivot(tableau: list[list[Fraction]], cost: list[Fraction], basis: list[int],
           row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    for i in range(len(tableau)):
        if i != row and tableau[i][col] != 0:
            f = tableau[i][col]
            tableau[i] = [a - f * b for a, b in zip(tableau[i], tableau[row])]
    if cost[col] != 0:
        f = cost[col]
        cost[:] = [a - f * b for a, b in zip(cost, tableau[row])]
    basis[row] = col


def _iterate(tableau: list[list[Fraction]], cost: list[Fraction], basis: list[int],
             n_enterable: int) -> str:
    """Run Bland-rule pivots until optimal or unbounded."""
    while True:
        enter = next((j for j in range(n_enterable) if cost[j] < 0), None)
        if enter is None:
            return "optimal"
        candidates = [
            (tableau[i][-1] / tableau[i][enter], basis[i], i)
            for i in range(len(tableau))
            if tableau[i][enter] > 0
        ]
        if not candidates:
            return "unbounded"
        _, _, leave_row = min(candidates)  # min ratio, ties by smallest basis index
        _pivot(tableau, cost, basis, leave_row, enter)


def solve_lp(c: Sequence[Fraction],
             a_ge: Sequence[Sequence[Fraction]] = (),
             b_ge: Sequence[Fraction] = (),
             a_eq: Sequence[Sequence[Fraction]] = (),
             b_eq: Sequence[Fraction] = ()) -> LPResult:
    """Exact LP solve; infeasibility and unboundedness are statuses, not errors."""
    n = len(c)
    c = [Fraction(v) for v in c]
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    n_surplus = len(a_ge)
    zero = Fraction(0)
    for k, (row, b) in enumerate(zip(a_ge, b_ge)):
        if len(row) != n:
            raise ValueError("inequality row width mismatch")
        r = [Fraction(v) for v in row] + [zero] * n_surplus
        r[n + k] = Fraction(-1)
        rows.append(r)
        rhs.append(Fraction(b))
    for row, b in zip(a_eq, b_eq):
        if len(row) != n:
            raise ValueError("equality row width mismatch")
        rows.append([Fraction(v) for v in row] + [zero] * n_surplus)
        rhs.append(Fraction(b))
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    m = len(rows)
    n_real = n + n_surplus
    art_start = n_real
    width = n_real + m + 1
    tableau = []
    for i, row in enumerate(rows):
        full = row + [zero] * m + [rhs[i]]
        full[art_start + i] = Fraction(1)
        tableau.append(full)
    basis = [art_start + i for i in range(m)]

    # Phase 1: minimize the artificial sum.  The reduced-cost row is the
    # negated column sum of the constraint rows (artificials priced out).
    cost1 = [zero] * width
    for j in range(width):
        cost1[j] = -sum(t[j] for t in tableau)
    for j in range(art_start, n_real + m):
        cost1[j] = zero
    status = _iterate(tableau, cost1, basis, n_real)
    if status != "optimal" or -cost1[-1] != 0:
        return LPResult("infeasible", None, None)

    # Pivot leftover zero-level artificials out of the basis; rows that
    # cannot pivot are redundant and get dropped.
    keep = []
    for i in range(len(tableau)):
        if basis[i] >= art_start:
            col = next((j for j in range(n_real) if tableau[i][j] != 0), None)
            if col is None:
                continue
            _pivot(tableau, cost1, basis[:], i, col)  # cost row irrelevant now
            basis[i] = col
        keep.append(i)
    tableau = [tableau[i][:art_start] + [tableau[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]

    cost2 = c + [zero] * n_surplus + [zero]
    for i, b in enumerate(basis):
        if cost2[b] != 0:
            f = cost2[b]
            cost2 = [a - f * v for a, v in zip(cost2, tableau[i])]
    status = _iterate(tableau, cost2, basis, n_real)
    if status == "unbounded":
        return LPResult("unbounded", None, None)
    x = [zero] * n_real
    for i, b in enumerate(basis):
        x[b] = tableau[i][-1]
    solution = tuple(x[:n])
    objective = sum((ci * xi for ci, xi in zip(c, solution)), zero)
    return LPResult("optimal", solution, objective)
