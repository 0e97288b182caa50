"""Dense two-phase tableau simplex over ``Fraction``.

Solves ``min c.x  s.t.  A x = b, x >= 0`` exactly and returns an optimal
vertex together with optimal dual prices.  Bland's rule, so no cycling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class Infeasible(ArithmeticError):
    pass


class Unbounded(ArithmeticError):
    pass


@dataclass
class LPResult:
    x: list[Fraction]
    y: list[Fraction]  # y.A <= c, y.b == value
    value: Fraction


def _pivot(T: list[list[Fraction]], r: int, col: int) -> None:
    row = T[r]
    p = row[col]
    if p != 1:
        inv = 1 / p
        T[r] = row = [v * inv for v in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[col]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]


def _run(T, basis, cost_row, allowed) -> None:
    """Iterate on tableau T (last row is the objective row) until optimal."""
    m = len(basis)
    while True:
        obj = T[m]
        col = next((j for j in allowed if obj[j] < 0), None)
        if col is None:
            return
        best = None
        for i in range(m):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise Unbounded("objective unbounded below")
        _pivot(T, best[1], col)
        basis[best[1]] = col


def solve(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]) -> LPResult:
    m = len(A)
    n = len(c)
    if m == 0:
        if any(v < 0 for v in c):
            raise Unbounded("objective unbounded below")
        return LPResult([Fraction(0)] * n, [], Fraction(0))
    sign = [1 if bi >= 0 else -1 for bi in b]
    # columns: n originals, m artificials, rhs
    T = []
    for i in range(m):
        s = sign[i]
        row = [Fraction(s * A[i][j]) for j in range(n)]
        row += [Fraction(1 if k == i else 0) for k in range(m)]
        row.append(Fraction(s * b[i]))
        T.append(row)
    basis = list(range(n, n + m))

    # phase 1: minimise the sum of artificials
    phase1 = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        for j in range(n):
            phase1[j] -= T[i][j]
        phase1[-1] -= T[i][-1]
    T.append(phase1)
    _run(T, basis, None, range(n))
    if T[m][-1] != 0:
        raise Infeasible("constraints have no non-negative solution")
    # drive zero-level artificials out where possible
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if T[i][j] != 0), None)
            if col is not None:
                _pivot(T, i, col)
                basis[i] = col

    # phase 2
    obj = [Fraction(v) for v in c] + [Fraction(0)] * m + [Fraction(0)]
    for i in range(m):
        cb = obj[basis[i]]
        if cb:
            obj = [a - cb * t for a, t in zip(obj, T[i])]
    T[m] = obj
    _run(T, basis, None, range(n))

    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    # reduced cost of artificial k is -y_k (artificial cost 0), undo the row flips
    y = [-T[m][n + k] * sign[k] for k in range(m)]
    value = sum((c[j] * x[j] for j in range(n)), Fraction(0))
    return LPResult(x, y, value)
