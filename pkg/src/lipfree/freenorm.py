"""Kantorovich-Rubinstein norm of finitely supported elements of F(M).

A free vector ``sum a_x delta(x)`` is stored as a sparse coefficient map
over point indices.  Since ``delta(base) = 0`` a base coefficient carries
no information and is dropped on normalisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from . import lp
from .errors import LipfreeError
from .metric import PointedMetricSpace
from .rational import RationalLike, as_fraction


class EqualPoints(LipfreeError):
    pass


class MissingValue(LipfreeError):
    pass


class FreeVector(dict):
    """Point index -> Fraction.  Zero entries are never stored."""

    def __init__(self, coeffs: Mapping[int, RationalLike] | Iterable = ()):
        super().__init__()
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for i, v in items:
            v = as_fraction(v)
            if v:
                self[int(i)] = self.get(int(i), Fraction(0)) + v
                if not self[int(i)]:
                    del self[int(i)]

    def reduced(self, base: int) -> "FreeVector":
        """Same element of F(M) with the (meaningless) base coefficient removed."""
        return FreeVector((i, v) for i, v in self.items() if i != base)

    def __add__(self, other: "FreeVector") -> "FreeVector":
        return FreeVector(list(self.items()) + list(other.items()))

    def __sub__(self, other: "FreeVector") -> "FreeVector":
        return FreeVector(list(self.items()) + [(i, -v) for i, v in other.items()])

    def __neg__(self) -> "FreeVector":
        return FreeVector((i, -v) for i, v in self.items())

    def scale(self, s: RationalLike) -> "FreeVector":
        s = as_fraction(s)
        return FreeVector((i, s * v) for i, v in self.items())

    __rmul__ = scale

    def key(self) -> tuple:
        return tuple(sorted(self.items()))


def combine(terms: Iterable[tuple[RationalLike, FreeVector]]) -> FreeVector:
    out: list = []
    for w, v in terms:
        w = as_fraction(w)
        out.extend((i, w * c) for i, c in v.items())
    return FreeVector(out)


def delta(i: int) -> FreeVector:
    return FreeVector({i: 1})


def molecule(space: PointedMetricSpace, x: int, y: int) -> FreeVector:
    """``(delta(x) - delta(y)) / d(x, y)`` with the base coefficient dropped."""
    if x == y:
        raise EqualPoints(f"molecule needs distinct points, got {x} twice")
    d = space.dist(x, y)
    return FreeVector({x: 1 / d, y: -1 / d}).reduced(space.base)


@dataclass
class TransportPlan:
    flows: dict  # (i, j) -> nonnegative Fraction

    def cost(self, space: PointedMetricSpace) -> Fraction:
        return sum((f * space.dist(i, j) for (i, j), f in self.flows.items()), Fraction(0))

    def divergence(self) -> dict:
        """Net outflow per point."""
        div: dict = {}
        for (i, j), f in self.flows.items():
            div[i] = div.get(i, Fraction(0)) + f
            div[j] = div.get(j, Fraction(0)) - f
        return div

    def carries(self, space: PointedMetricSpace, v: FreeVector) -> bool:
        """True when the plan ships exactly ``v`` (base absorbs the imbalance)."""
        if any(f < 0 for f in self.flows.values()):
            return False
        n = len(space)
        if any(not (0 <= i < n and 0 <= j < n) for i, j in self.flows):
            return False
        div = self.divergence()
        target = v.reduced(space.base)
        pts = (set(div) | set(target)) - {space.base}
        return all(div.get(p, 0) == target.get(p, 0) for p in pts)


@dataclass
class LipWitness:
    values: dict  # point index -> Fraction, value 0 at base


def lip_constant(space: PointedMetricSpace, f: LipWitness) -> Fraction:
    """Best Lipschitz constant of a function given on every point."""
    n = len(space)
    missing = [i for i in range(n) if i not in f.values]
    if missing:
        raise MissingValue(f"no value at points {missing[:10]}")
    return lip_constant_on(space, f.values, range(n))


def lip_constant_on(space: PointedMetricSpace, values: Mapping[int, Fraction], points: Iterable[int]) -> Fraction:
    pts = sorted(set(points))
    best = Fraction(0)
    for a, i in enumerate(pts):
        fi = values[i]
        for j in pts[a + 1 :]:
            r = abs(fi - values[j]) / space.dist(i, j)
            if r > best:
                best = r
    return best


def pairing(v: FreeVector, f: LipWitness | Mapping[int, Fraction], base: int | None = None) -> Fraction:
    """``<v, f>``; terms at ``base`` (if given) vanish since delta(base) = 0."""
    values = f.values if isinstance(f, LipWitness) else f
    total = Fraction(0)
    for i, c in v.items():
        if i == base:
            continue
        if i not in values:
            raise MissingValue(f"function undefined at point {i}")
        total += c * values[i]
    return total


def mcshane_extend(space: PointedMetricSpace, values: Mapping[int, Fraction]) -> dict:
    """Largest 1-Lipschitz extension ``min_y f(y) + d(x, y)``, shifted to vanish at base."""
    known = sorted(values)
    ext = {}
    for x in range(len(space)):
        ext[x] = min(values[y] + space.dist(x, y) for y in known)
    shift = ext[space.base]
    return {x: v - shift for x, v in ext.items()}


def kr_norm(space: PointedMetricSpace, v: FreeVector) -> tuple[Fraction, TransportPlan, LipWitness]:
    """Exact norm with an optimal plan and a 1-Lipschitz dual attaining it.

    Min-cost flow on the complete graph over supp(v) and the base, where the
    base is a free source/sink; node potentials give the dual function,
    extended to the whole space by McShane.
    """
    base = space.base
    target = v.reduced(base)
    if not target:
        return Fraction(0), TransportPlan({}), LipWitness({i: Fraction(0) for i in range(len(space))})
    support = sorted(target)
    nodes = [base] + support
    arcs = [(p, q) for p in nodes for q in nodes if p != q]
    row_of = {p: r for r, p in enumerate(support)}
    A = [[Fraction(0)] * len(arcs) for _ in support]
    for col, (p, q) in enumerate(arcs):
        if p in row_of:
            A[row_of[p]][col] += 1
        if q in row_of:
            A[row_of[q]][col] -= 1
    b = [target[p] for p in support]
    c = [space.dist(p, q) for p, q in arcs]
    res = lp.solve(A, b, c)
    flows = {arc: x for arc, x in zip(arcs, res.x) if x}
    potentials = {base: Fraction(0)}
    potentials.update({p: res.y[row_of[p]] for p in support})
    dual = LipWitness(mcshane_extend(space, potentials))
    return res.value, TransportPlan(flows), dual
