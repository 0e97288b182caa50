"""Outer approximation of the iterated slice derivation on a tiny free-space ball.

Coordinates are the coefficients on the non-base points, so ``F(M)`` is
``Q^d`` with ``d = |M| - 1``.  The dual ball is a polytope whose vertices
``Phi`` give the norm exactly: ``||x|| = max_phi <x, phi>``.  Hence the
diameter of a set is ``max_phi (max phi - min phi)`` and, for a fixed slice
direction f, each ``phi`` reduces the diameter of ``{f >= a}`` to a
piecewise-linear function of ``a`` read off a planar hull.

Only finitely many directions are used, so each step keeps a superset of
the true derived set: emptiness is a sound upper bound, never the converse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil
from typing import Sequence

from .errors import DimensionLimit
from .freenorm import FreeVector, LipWitness, kr_norm, lip_constant
from .metric import PointedMetricSpace
from .polytope import hull_2d, vertices
from .rational import RationalLike, as_fraction, fmt

DEFAULT_DIM_CAP = 5
DEFAULT_RESOLUTION = 12

Vec = tuple  # tuple of Fractions in coordinate order


def _coords(space: PointedMetricSpace) -> list[int]:
    return [i for i in range(len(space)) if i != space.base]


def _check_dim(space: PointedMetricSpace, cap: int) -> int:
    d = len(space) - 1
    if d > cap:
        raise DimensionLimit(d, cap)
    if d < 1:
        raise ValueError("need at least two points")
    return d


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def to_vector(space: PointedMetricSpace, v: FreeVector) -> Vec:
    r = v.reduced(space.base)
    return tuple(r.get(i, Fraction(0)) for i in _coords(space))


def from_vector(space: PointedMetricSpace, x: Sequence[Fraction]) -> FreeVector:
    return FreeVector(zip(_coords(space), x))


def witness_vector(space: PointedMetricSpace, f: LipWitness) -> Vec:
    return tuple(as_fraction(f.values[i]) - as_fraction(f.values.get(space.base, 0)) for i in _coords(space))


def lip_ball_vertices(space: PointedMetricSpace, cap: int = DEFAULT_DIM_CAP) -> list[LipWitness]:
    """Extreme points of ``{f : f(base) = 0, |f(x) - f(y)| <= d(x, y)}``."""
    d = _check_dim(space, cap)
    cs = _coords(space)
    A, b = [], []
    for a, i in enumerate(cs):
        for s in (1, -1):
            row = [Fraction(0)] * d
            row[a] = Fraction(s)
            A.append(row)
            b.append(space.dist(i, space.base))
    for (a, i), (c, j) in combinations(enumerate(cs), 2):
        for s in (1, -1):
            row = [Fraction(0)] * d
            row[a], row[c] = Fraction(s), Fraction(-s)
            A.append(row)
            b.append(space.dist(i, j))
    out = []
    for v in vertices(A, b):
        vals = {space.base: Fraction(0)}
        vals.update(zip(cs, v))
        out.append(LipWitness(vals))
    return out


def molecule_directions(space: PointedMetricSpace, cap: int = DEFAULT_DIM_CAP) -> list[LipWitness]:
    """For each ordered pair, ``(d(., y) - d(., x)) / 2`` re-based at 0; it norms ``m_{x,y}``."""
    _check_dim(space, cap)
    n = len(space)
    out = []
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            vals = {z: (space.dist(z, y) - space.dist(z, x)) / 2 for z in range(n)}
            shift = vals[space.base]
            out.append(LipWitness({z: v - shift for z, v in vals.items()}))
    return out


def lip_norm(space: PointedMetricSpace, f: Sequence[Fraction]) -> Fraction:
    """Best Lipschitz constant of a coordinate vector (value 0 at the base)."""
    vals = [Fraction(0)] * len(space)
    for i, x in zip(_coords(space), f):
        vals[i] = x
    return max(abs(vals[i] - vals[j]) / space.dist(i, j) for i, j in combinations(range(len(space)), 2))


def exposing_directions(C: "PolytopeV") -> list[Vec]:
    """One norm-one functional per vertex, exposing exactly that vertex.

    The sum of the constraint normals tight at a vertex lies in the interior
    of its normal cone.
    """
    out = []
    seen = set()
    for v in C.vertices:
        d = len(v)
        n = [Fraction(0)] * d
        for r, b in C.rows:
            if _dot(r, v) == b:
                n = [x + y for x, y in zip(n, r)]
        if not any(n):
            continue
        s = lip_norm(C.space, n)
        f = tuple(x / s for x in n)
        if f not in seen:
            seen.add(f)
            out.append(f)
    return out


def direction_family(space: PointedMetricSpace, name: str, cap: int = DEFAULT_DIM_CAP) -> "SliceFamily":
    """``lipball``, ``molecule``, ``both`` or ``adaptive``.

    ``adaptive`` is ``both`` plus, at every step, the vertex-exposing
    directions of the current set.
    """
    if name == "adaptive":
        fam = direction_family(space, "both", cap)
        fam.adaptive = True
        return fam
    if name == "lipball":
        return SliceFamily(lip_ball_vertices(space, cap))
    if name == "molecule":
        return SliceFamily(molecule_directions(space, cap))
    if name == "both":
        return SliceFamily(lip_ball_vertices(space, cap) + molecule_directions(space, cap))
    raise ValueError(f"unknown direction family {name!r}")


@dataclass
class SliceFamily:
    directions: list  # LipWitness, each with Lipschitz constant exactly 1
    adaptive: bool = False

    def __post_init__(self) -> None:
        seen = set()
        kept = []
        for f in self.directions:
            key = tuple(sorted(f.values.items()))
            if key not in seen:
                seen.add(key)
                kept.append(f)
        self.directions = kept

    @classmethod
    def checked(cls, space: PointedMetricSpace, directions: Sequence[LipWitness]) -> "SliceFamily":
        for f in directions:
            if lip_constant(space, f) != 1:
                raise ValueError("slice directions must have Lipschitz constant exactly 1")
        return cls(list(directions))


@dataclass
class PolytopeV:
    """Current set: vertices plus the H-form they were enumerated from."""

    space: PointedMetricSpace
    vertices: list  # list of Vec
    rows: list  # list of (Vec, rhs): <row, x> <= rhs
    norm_dirs: list  # Phi as Vec, used for diameters

    @property
    def empty(self) -> bool:
        return not self.vertices

    def contains(self, x: Sequence[Fraction]) -> bool:
        return all(_dot(r, x) <= rhs for r, rhs in self.rows)

    def diameter(self) -> Fraction:
        if not self.vertices:
            return Fraction(0)
        return max(
            max(_dot(p, v) for v in self.vertices) - min(_dot(p, v) for v in self.vertices) for p in self.norm_dirs
        )


def unit_ball(space: PointedMetricSpace, cap: int = DEFAULT_DIM_CAP) -> PolytopeV:
    """``B_F(M)`` with the signed molecules as generating vertices."""
    _check_dim(space, cap)
    phi = [witness_vector(space, f) for f in lip_ball_vertices(space, cap)]
    n = len(space)
    verts = set()
    cs = _coords(space)
    for i in range(n):
        for j in range(n):
            if i != j:
                d = space.dist(i, j)
                verts.add(tuple((Fraction(int(c == i)) - Fraction(int(c == j))) / d for c in cs))
    return PolytopeV(space, sorted(verts), [(p, Fraction(1)) for p in phi], phi)


# thresholds -------------------------------------------------------------

def _width_profile(points: list[tuple[Fraction, Fraction]]):
    """``w(a)`` = vertical extent of hull(points) restricted to ``x >= a``, as a callable."""
    hull = hull_2d(points)
    edges = list(zip(hull, hull[1:] + hull[:1])) if len(hull) > 1 else []

    def w(a: Fraction) -> Fraction:
        ys = [y for x, y in hull if x >= a]
        for (x1, y1), (x2, y2) in edges:
            if min(x1, x2) < a < max(x1, x2):
                ys.append(y1 + (y2 - y1) * (a - x1) / (x2 - x1))
        return max(ys) - min(ys)

    return sorted({x for x, _ in hull}), w


def _last_wide(points, eps: Fraction) -> Fraction | None:
    """Largest a with width(x >= a) >= eps, or None when even the full width is < eps."""
    xs, w = _width_profile(points)
    vals = [w(x) for x in xs]
    if vals[0] < eps:
        return None
    i = max(j for j, v in enumerate(vals) if v >= eps)
    if i == len(xs) - 1:
        return xs[-1]
    x0, x1, w0, w1 = xs[i], xs[i + 1], vals[i], vals[i + 1]
    return x0 + (w0 - eps) / (w0 - w1) * (x1 - x0)


def exact_threshold(C: PolytopeV, f: Sequence[Fraction], eps: Fraction) -> Fraction | None:
    """Infimum of a with diam(C ∩ {f > a}) < eps; None means every slice qualifies."""
    if C.diameter() < eps:
        return None
    fx = [_dot(f, v) for v in C.vertices]
    best = None
    for p in C.norm_dirs:
        a = _last_wide([(x, _dot(p, v)) for x, v in zip(fx, C.vertices)], eps)
        if a is not None and (best is None or a > best):
            best = a
    return best


def round_up(a: Fraction, resolution: int | None) -> Fraction:
    if resolution is None:
        return a
    scale = 2**resolution
    return Fraction(ceil(a * scale), scale)


def slice_threshold(
    C: PolytopeV, f: LipWitness | Sequence[Fraction], eps: RationalLike, resolution: int | None = DEFAULT_RESOLUTION
) -> Fraction | None:
    """Threshold a_f: removing ``{f > a_f}`` is justified.  Rounded up to the 2**-t grid."""
    eps = as_fraction(eps)
    fv = witness_vector(C.space, f) if isinstance(f, LipWitness) else tuple(f)
    a = exact_threshold(C, fv, eps)
    return None if a is None else round_up(a, resolution)


# bisection against an independent diameter oracle ------------------------

def section_diameter(C: PolytopeV, f: Sequence[Fraction], a: Fraction) -> Fraction:
    """diam of ``C ∩ {f >= a}`` by vertex enumeration and pairwise KR norms."""
    rows = [r for r, _ in C.rows] + [tuple(-x for x in f)]
    rhs = [b for _, b in C.rows] + [-a]
    pts = vertices(rows, rhs)
    best = Fraction(0)
    for p, q in combinations(pts, 2):
        diff = from_vector(C.space, tuple(x - y for x, y in zip(p, q)))
        best = max(best, kr_norm(C.space, diff)[0])
    return best


def bisect_threshold(C: PolytopeV, f: Sequence[Fraction], eps: RationalLike, resolution: int) -> Fraction | None:
    """Upper end of a bisection bracket of width <= 2**-resolution around the threshold."""
    eps = as_fraction(eps)
    fx = [_dot(f, v) for v in C.vertices]
    lo, hi = min(fx), max(fx)
    if section_diameter(C, f, lo) < eps:
        return None
    step = Fraction(1, 2**resolution)
    while hi - lo > step:
        mid = (lo + hi) / 2
        if section_diameter(C, f, mid) < eps:
            hi = mid
        else:
            lo = mid
    return hi


# peeling ----------------------------------------------------------------

@dataclass
class StepRecord:
    step: int
    removed: list  # (direction Vec, threshold or None)
    vertex_count: int

    def to_json(self, space: PointedMetricSpace) -> str:
        cs = _coords(space)
        removed = []
        for f, a in self.removed:
            vals = [Fraction(0)] * len(space)
            for i, x in zip(cs, f):
                vals[i] = x
            removed.append({"direction": [fmt(v) for v in vals], "threshold": "-inf" if a is None else fmt(a)})
        return json.dumps(
            {"step": self.step, "removed": removed, "vertices": self.vertex_count}, sort_keys=True, separators=(",", ":")
        )


@dataclass
class FirstEmpty:
    step: int
    transcript: list = field(default_factory=list, repr=False)


@dataclass
class StillNonempty:
    steps: int
    witness: FreeVector
    transcript: list = field(default_factory=list, repr=False)


def peel_step(
    C: PolytopeV,
    slices: SliceFamily | Sequence[Sequence[Fraction]],
    eps: RationalLike,
    resolution: int | None = DEFAULT_RESOLUTION,
    step: int = 0,
) -> tuple[PolytopeV, StepRecord]:
    eps = as_fraction(eps)
    if C.empty:
        return C, StepRecord(step, [], 0)
    if isinstance(slices, SliceFamily):
        dirs = [witness_vector(C.space, f) for f in slices.directions]
        if slices.adaptive:
            known = set(dirs)
            dirs += [f for f in exposing_directions(C) if f not in known]
    else:
        dirs = [tuple(f) for f in slices]
    cuts = []
    for f in dirs:
        a = slice_threshold(C, f, eps, resolution)
        if a is None:
            empty = PolytopeV(C.space, [], C.rows, C.norm_dirs)
            return empty, StepRecord(step, [(f, None)], 0)
        if a < max(_dot(f, v) for v in C.vertices):
            cuts.append((f, a))
    if not cuts:
        return C, StepRecord(step, [], len(C.vertices))
    rows = C.rows + [(tuple(f), a) for f, a in cuts]
    verts = vertices([r for r, _ in rows], [b for _, b in rows])
    # a constraint tight at no vertex of a bounded polytope is redundant
    kept = [(r, b) for r, b in rows if any(_dot(r, v) == b for v in verts)] if verts else rows
    out = PolytopeV(C.space, verts, kept, C.norm_dirs)
    return out, StepRecord(step, cuts, len(verts))


def peel_depth(
    space: PointedMetricSpace,
    eps: RationalLike,
    slices: SliceFamily | None = None,
    max_steps: int = 16,
    resolution: int | None = DEFAULT_RESOLUTION,
    cap: int = DEFAULT_DIM_CAP,
) -> FirstEmpty | StillNonempty:
    """Peel the unit ball until it is empty or ``max_steps`` steps have run."""
    eps = as_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    C = unit_ball(space, cap)
    if slices is None:
        slices = SliceFamily(lip_ball_vertices(space, cap))
    transcript = []
    for j in range(1, max_steps + 1):
        C, rec = peel_step(C, slices, eps, resolution, step=j)
        transcript.append(rec)
        if C.empty:
            return FirstEmpty(j, transcript)
    d = len(C.vertices[0])
    centroid = tuple(sum((v[k] for v in C.vertices), Fraction(0)) / len(C.vertices) for k in range(d))
    return StillNonempty(max_steps, from_vector(space, centroid), transcript)


def peel_sets(
    space: PointedMetricSpace,
    eps: RationalLike,
    steps: int,
    slices: SliceFamily | None = None,
    resolution: int | None = DEFAULT_RESOLUTION,
    cap: int = DEFAULT_DIM_CAP,
) -> list[PolytopeV]:
    """``[C_0, C_1, ..., C_steps]`` (stops early once empty)."""
    C = unit_ball(space, cap)
    if slices is None:
        slices = SliceFamily(lip_ball_vertices(space, cap))
    out = [C]
    for j in range(1, steps + 1):
        C, _ = peel_step(C, slices, eps, resolution, step=j)
        out.append(C)
        if C.empty:
            break
    return out


def transcript_lines(space: PointedMetricSpace, result: FirstEmpty | StillNonempty) -> list[str]:
    return [rec.to_json(space) for rec in result.transcript]
