"""Exact vertex enumeration by the double description method.

Bounded polyhedra ``{x : A x <= b}`` are homogenized to the pointed cone
``{(x, t) : A x - b t <= 0, t >= 0}``; its extreme rays with ``t > 0`` are
the vertices.  Rays are kept as primitive integer vectors and adjacency
uses the combinatorial test on zero sets, so no floating point enters.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .rational import RationalLike, as_fraction


class Unbounded(ValueError):
    pass


def _int_row(row: Sequence[Fraction]) -> list[int]:
    den = 1
    for v in row:
        den = math.lcm(den, v.denominator)
    ints = [v.numerator * (den // v.denominator) for v in row]
    g = math.gcd(*ints)
    return [x // g for x in ints] if g > 1 else ints


def _primitive(v: list[int]) -> tuple[int, ...]:
    g = math.gcd(*v)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def _independent_rows(H: list[list[int]], dim: int) -> list[int]:
    """Greedy choice of ``dim`` linearly independent rows, or fewer if rank-deficient."""
    chosen: list[int] = []
    basis: list[tuple[int, list[Fraction]]] = []  # (pivot column, reduced row)
    for idx, row in enumerate(H):
        r = [Fraction(x) for x in row]
        for piv, b in basis:
            if r[piv]:
                f = r[piv] / b[piv]
                r = [x - f * y for x, y in zip(r, b)]
        piv = next((j for j, x in enumerate(r) if x), None)
        if piv is None:
            continue
        basis.append((piv, r))
        chosen.append(idx)
        if len(chosen) == dim:
            break
    return chosen


def _inverse(M: list[list[int]]) -> list[list[Fraction]]:
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c])
        A[c], A[p] = A[p], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def extreme_rays(H: list[list[int]], dim: int) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone ``{z : H z <= 0}`` in ``Z^dim``."""
    init = _independent_rows(H, dim)
    if len(init) < dim:
        raise Unbounded("constraint matrix does not have full column rank")
    inv = _inverse([H[i] for i in init])
    rays = []
    for j in range(dim):
        col = [-inv[i][j] for i in range(dim)]
        rays.append(_primitive(_int_row(col)))
    zeros = [frozenset(i for i in init if _dot(H[i], r) == 0) for r in rays]
    done = set(init)
    for h_idx, h in enumerate(H):
        if h_idx in done:
            continue
        vals = [_dot(h, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        if not pos:
            done.add(h_idx)
            zeros = [z | {h_idx} if v == 0 else z for z, v in zip(zeros, vals)]
            continue
        neg = [i for i, v in enumerate(vals) if v < 0]
        new_rays = []
        new_zeros = []
        for i, v in enumerate(vals):
            if v <= 0:
                new_rays.append(rays[i])
                new_zeros.append(zeros[i] | {h_idx} if v == 0 else zeros[i])
        for p in pos:
            for q in neg:
                common = zeros[p] & zeros[q]
                if len(common) < dim - 2:
                    continue
                if any(k != p and k != q and common <= zeros[k] for k in range(len(rays))):
                    continue
                r = [vals[p] * a - vals[q] * b for a, b in zip(rays[q], rays[p])]
                new_rays.append(_primitive(r))
                new_zeros.append(common | {h_idx})
        done.add(h_idx)
        rays, zeros = new_rays, new_zeros
        if not rays:
            break
    return rays


def vertices(A: Sequence[Sequence[RationalLike]], b: Sequence[RationalLike]) -> list[tuple[Fraction, ...]]:
    """Vertices of the bounded polyhedron ``{x : A x <= b}``, sorted; ``[]`` when empty."""
    if not A:
        raise Unbounded("no constraints")
    d = len(A[0])
    H = []
    for row, rhs in zip(A, b):
        H.append(_int_row([as_fraction(v) for v in row] + [-as_fraction(rhs)]))
    H.append([0] * d + [-1])
    rays = extreme_rays(H, d + 1)
    out = set()
    for r in rays:
        t = r[-1]
        if t > 0:
            out.add(tuple(Fraction(x, t) for x in r[:-1]))
        elif t == 0 and any(r):
            raise Unbounded("polyhedron has a recession direction")
    return sorted(out)


def hull_2d(points: Sequence[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    """Convex hull (counter-clockwise, no collinear points) by monotone chain."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]
