"""Finite pointed metric spaces with exact rational distances.

Distances are stored as an int64 numerator matrix over one common
denominator, so every entry is an exact rational and whole-matrix checks
stay vectorized.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import LipfreeError
from .rational import RationalLike, as_fraction, fmt, parse_rational

_INT_LIMIT = 2**62
_FLOAT_EXACT = 2**53


class MetricError(LipfreeError):
    """Base class for metric-axiom failures; ``violations`` lists all of them."""

    violations: list["MetricError"]


class AsymmetryError(MetricError):
    def __init__(self, i: int, j: int):
        self.i, self.j = i, j
        super().__init__(f"d[{i}][{j}] != d[{j}][{i}]")


class TriangleViolation(MetricError):
    """``d(i, j) > d(i, k) + d(k, j)``."""

    def __init__(self, i: int, j: int, k: int):
        self.i, self.j, self.k = i, j, k
        super().__init__(f"d({i},{j}) > d({i},{k}) + d({k},{j})")

    @property
    def indices(self) -> tuple[int, int, int]:
        return (self.i, self.j, self.k)


class ZeroDistance(MetricError):
    def __init__(self, i: int, j: int):
        self.i, self.j = i, j
        super().__init__(f"distinct points {i} and {j} at distance 0")


class NegativeDistance(MetricError):
    def __init__(self, i: int, j: int):
        self.i, self.j = i, j
        super().__init__(f"d[{i}][{j}] is negative")


class NonzeroDiagonal(MetricError):
    def __init__(self, i: int):
        self.i = i
        super().__init__(f"d[{i}][{i}] != 0")


class DisconnectedGraph(LipfreeError):
    pass


class EmptySubset(LipfreeError):
    pass


class BaseNotInSubset(LipfreeError):
    pass


class SinglePoint(LipfreeError):
    pass


def _canonical_label(label: Any) -> Hashable:
    if isinstance(label, list):
        return tuple(_canonical_label(x) for x in label)
    if isinstance(label, tuple):
        return tuple(_canonical_label(x) for x in label)
    if isinstance(label, (int, str)) and not isinstance(label, bool):
        return label
    raise TypeError(f"unsupported point label {label!r}")


def _label_to_json(label: Hashable) -> Any:
    if isinstance(label, tuple):
        return [_label_to_json(x) for x in label]
    return label


@dataclass(frozen=True, eq=False)
class PointedMetricSpace:
    """Points ``labels``, basepoint ``base``, distances ``num / den``."""

    labels: tuple
    base: int
    num: np.ndarray = field(repr=False)
    den: int = 1

    def __post_init__(self) -> None:
        num = np.asarray(self.num, dtype=np.int64)
        n = len(self.labels)
        if num.shape != (n, n):
            raise ValueError(f"distance matrix shape {num.shape} does not match {n} labels")
        if not 0 <= self.base < n:
            raise ValueError(f"base index {self.base} out of range")
        den = int(self.den)
        if den <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(den, int(np.gcd.reduce(num, axis=None))) if n else den
        if g > 1:
            num = num // g
            den //= g
        num = num.copy() if num is self.num else num
        num.setflags(write=False)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "labels", tuple(_canonical_label(x) for x in self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointedMetricSpace):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.base == other.base
            and self.den == other.den
            and np.array_equal(self.num, other.num)
        )

    def __hash__(self) -> int:
        return hash(self.content_hash)

    def dist(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.num[i, j]), self.den)

    def matrix(self) -> list[list[Fraction]]:
        return [[Fraction(int(v), self.den) for v in row] for row in self.num]

    @cached_property
    def index(self) -> dict:
        """Label -> point index."""
        return {lab: i for i, lab in enumerate(self.labels)}

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        head = json.dumps(
            {"labels": [_label_to_json(x) for x in self.labels], "base": self.base, "den": self.den},
            sort_keys=True,
            separators=(",", ":"),
        )
        h.update(head.encode())
        h.update(np.ascontiguousarray(self.num, dtype="<i8").tobytes())
        return h.hexdigest()

    def to_doc(self) -> dict:
        return {
            "labels": [_label_to_json(x) for x in self.labels],
            "base": self.base,
            "dist": [[fmt(Fraction(int(v), self.den)) for v in row] for row in self.num],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "PointedMetricSpace":
        rows = [[parse_rational(s) for s in row] for row in doc["dist"]]
        return from_fractions(rows, doc["base"], doc["labels"])


def _common_denominator(rows: Sequence[Sequence[Fraction]]) -> tuple[np.ndarray, int]:
    den = 1
    for row in rows:
        for v in row:
            den = math.lcm(den, v.denominator)
    ints = [[v.numerator * (den // v.denominator) for v in row] for row in rows]
    if any(abs(x) >= _INT_LIMIT for row in ints for x in row):
        raise ValueError("distances too large for exact int64 storage")
    n = len(rows)
    return np.array(ints, dtype=np.int64).reshape(n, n), den


def from_fractions(
    rows: Sequence[Sequence[RationalLike]], base: int = 0, labels: Iterable | None = None
) -> PointedMetricSpace:
    """Build a space without checking the metric axioms."""
    frows = [[as_fraction(v) for v in row] for row in rows]
    n = len(frows)
    if any(len(r) != n for r in frows):
        raise ValueError("distance matrix must be square")
    num, den = _common_denominator(frows)
    labs = tuple(labels) if labels is not None else tuple(range(n))
    return PointedMetricSpace(labs, base, num, den)


def find_violations(num: np.ndarray) -> list[MetricError]:
    n = num.shape[0]
    out: list[MetricError] = []
    for i in np.flatnonzero(np.diag(num) != 0):
        out.append(NonzeroDiagonal(int(i)))
    for i, j in zip(*np.nonzero(num < 0)):
        out.append(NegativeDistance(int(i), int(j)))
    asym = np.triu(num != num.T, 1)
    for i, j in zip(*np.nonzero(asym)):
        out.append(AsymmetryError(int(i), int(j)))
    zero = np.triu(num == 0, 1)
    for i, j in zip(*np.nonzero(zero)):
        out.append(ZeroDistance(int(i), int(j)))
    for k in range(n):
        via = num[:, k : k + 1] + num[k : k + 1, :]
        bad = np.triu(num > via, 1)
        bad[k, :] = False
        bad[:, k] = False
        for i, j in zip(*np.nonzero(bad)):
            out.append(TriangleViolation(int(i), int(j), k))
    return out


def validate(
    rows: Sequence[Sequence[RationalLike]] | PointedMetricSpace,
    base: int = 0,
    labels: Iterable | None = None,
) -> PointedMetricSpace:
    """Check every metric axiom exactly.

    Raises the first violation found; its ``violations`` attribute carries
    the complete list (with offending indices).
    """
    space = rows if isinstance(rows, PointedMetricSpace) else from_fractions(rows, base, labels)
    found = find_violations(space.num)
    if found:
        err = found[0]
        err.violations = found
        raise err
    return space


@dataclass(frozen=True)
class WeightedGraph:
    vertices: tuple
    edges: tuple  # (i, j, weight) with positive rational weight

    @classmethod
    def from_edges(cls, vertices: Iterable, edges: Iterable[tuple[int, int, RationalLike]]):
        es = tuple((int(i), int(j), as_fraction(w)) for i, j, w in edges)
        for i, j, w in es:
            if w <= 0:
                raise ValueError(f"edge ({i},{j}) has non-positive weight {w}")
        return cls(tuple(vertices), es)


def shortest_path_metric(g: WeightedGraph, base: int = 0) -> PointedMetricSpace:
    """All-pairs shortest-path distances, exact.

    Weights are scaled to integers by their common denominator; Dijkstra in
    float64 is then exact as long as every path length stays below 2**53,
    which is checked.
    """
    n = len(g.vertices)
    if n == 0:
        raise EmptySubset("graph has no vertices")
    den = 1
    for _, _, w in g.edges:
        den = math.lcm(den, w.denominator)
    # parallel edges: keep the lightest (a sparse matrix would sum them)
    lightest: dict = {}
    for i, j, w in g.edges:
        key = (min(i, j), max(i, j))
        if key not in lightest or w < lightest[key]:
            lightest[key] = w
    rows = np.array([i for i, _ in lightest], dtype=np.int64)
    cols = np.array([j for _, j in lightest], dtype=np.int64)
    iw = [w.numerator * (den // w.denominator) for w in lightest.values()]
    if sum(iw) >= _FLOAT_EXACT:
        raise ValueError("total edge weight too large for exact shortest paths")
    adj = coo_matrix((np.array(iw, dtype=np.float64), (rows, cols)), shape=(n, n)).tocsr()
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise DisconnectedGraph(f"graph has {ncomp} connected components")
    d = shortest_path(adj, method="D", directed=False)
    num = np.rint(d).astype(np.int64)
    if not np.array_equal(num.astype(np.float64), d):
        raise ValueError("non-integral path length; exactness lost")
    return PointedMetricSpace(g.vertices, base, num, den)


def rescale(space: PointedMetricSpace, s: RationalLike) -> PointedMetricSpace:
    s = as_fraction(s)
    if s <= 0:
        raise ValueError("scale must be positive")
    if int(np.abs(space.num).max(initial=0)) * s.numerator >= _INT_LIMIT:
        raise ValueError("rescaled distances overflow int64")
    return PointedMetricSpace(space.labels, space.base, space.num * s.numerator, space.den * s.denominator)


def subspace(space: PointedMetricSpace, subset: Sequence[int], new_base: int | None = None) -> PointedMetricSpace:
    """Restrict to ``subset`` (kept in the given order); ``new_base`` is an index of ``space``."""
    idx = list(subset)
    if not idx:
        raise EmptySubset("subset is empty")
    if new_base is None:
        new_base = space.base
    if new_base not in idx:
        raise BaseNotInSubset(f"base {new_base} not in subset")
    arr = np.array(idx, dtype=np.int64)
    num = space.num[np.ix_(arr, arr)]
    return PointedMetricSpace(tuple(space.labels[i] for i in idx), idx.index(new_base), num, space.den)


def separation_and_diameter(space: PointedMetricSpace) -> tuple[Fraction, Fraction]:
    n = len(space)
    if n < 2:
        raise SinglePoint("need at least two points")
    off = space.num[~np.eye(n, dtype=bool)]
    return Fraction(int(off.min()), space.den), Fraction(int(off.max()), space.den)


def dumps_space(space: PointedMetricSpace) -> str:
    return json.dumps(space.to_doc(), sort_keys=True, separators=(",", ":")) + "\n"


def loads_space(text: str) -> PointedMetricSpace:
    return PointedMetricSpace.from_doc(json.loads(text))
