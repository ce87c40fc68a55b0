"""Small dense exact-rational linear programming.

Two-phase primal simplex over ``fractions.Fraction`` with Bland's rule, for
feasibility certificates where floating point cannot be trusted to decide
strict inequalities.  Problem form: maximize c.x subject to A x <= b, x >= 0
(entries of b may be negative).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Number = int | Fraction


class UnboundedError(Exception):
    """The LP has unbounded objective value."""


def _pivot(rows, obj, basis, r, col, width):
    piv = rows[r][col]
    rows[r] = [v / piv for v in rows[r]]
    for i, row in enumerate(rows):
        if i != r and row[col] != 0:
            coef = row[col]
            rows[i] = [v - coef * w for v, w in zip(row, rows[r])]
    if obj[col] != 0:
        coef = obj[col]
        for j in range(width + 1):
            obj[j] -= coef * rows[r][j]
    basis[r] = col


def _optimize(rows, obj, basis, width, blocked=frozenset()):
    while True:
        col = next(
            (j for j in range(width) if j not in blocked and obj[j] > 0), None
        )
        if col is None:
            return
        best = None
        for i, row in enumerate(rows):
            if row[col] > 0:
                ratio = row[width] / row[col]
                if best is None or ratio < best[0] or (
                    ratio == best[0] and basis[i] < basis[best[1]]
                ):
                    best = (ratio, i)
        if best is None:
            raise UnboundedError(f"column {col} unbounded")
        _pivot(rows, obj, basis, best[1], col, width)


def maximize(
    c: Sequence[Number],
    a_ub: Sequence[Sequence[Number]],
    b_ub: Sequence[Number],
) -> tuple[Fraction, list[Fraction]] | None:
    """Maximize ``c . x`` subject to ``a_ub x <= b_ub`` and ``x >= 0``.

    Returns ``(optimal value, x)`` with exact rationals, or ``None`` when the
    constraints are infeasible.  Raises :class:`UnboundedError` when the
    objective is unbounded above.
    """
    m, n = len(a_ub), len(c)
    neg = [Fraction(b) < 0 for b in b_ub]
    nart = sum(neg)
    width = n + m + nart
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    ai = 0
    for i in range(m):
        sgn = -1 if neg[i] else 1
        row = [Fraction(0)] * (width + 1)
        for j in range(n):
            row[j] = sgn * Fraction(a_ub[i][j])
        row[n + i] = Fraction(sgn)
        row[width] = sgn * Fraction(b_ub[i])
        if neg[i]:
            row[n + m + ai] = Fraction(1)
            basis.append(n + m + ai)
            ai += 1
        else:
            basis.append(n + i)
        rows.append(row)

    if nart:
        obj = [Fraction(0)] * (width + 1)
        for j in range(n + m, width):
            obj[j] = Fraction(-1)
        for i in range(m):
            if basis[i] >= n + m:
                for j in range(width + 1):
                    obj[j] += rows[i][j]
        _optimize(rows, obj, basis, width)
        if obj[width] != 0:
            return None
        # Drive any leftover (degenerate) artificials out of the basis.
        for i in range(m):
            if basis[i] >= n + m:
                col = next((j for j in range(n + m) if rows[i][j] != 0), None)
                if col is not None:
                    _pivot(rows, obj, basis, i, col, width)

    obj = [Fraction(0)] * (width + 1)
    for j in range(n):
        obj[j] = Fraction(c[j])
    for i in range(m):
        if obj[basis[i]] != 0:
            coef = obj[basis[i]]
            for j in range(width + 1):
                obj[j] -= coef * rows[i][j]
    _optimize(rows, obj, basis, width, blocked=frozenset(range(n + m, width)))

    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = rows[i][width]
    return -obj[width], x
