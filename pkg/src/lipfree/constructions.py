"""Builders for diamonds, chains, l1-sums, trimmed pieces and M_alpha.

Every builder works on exact int64 numerators, and the ones used by the
certificate generators also return index maps so that each glued copy can
be located inside the final space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DEFAULT_POINT_CAP, LipfreeError, SizeLimitExceeded
from .metric import PointedMetricSpace, WeightedGraph, from_fractions, shortest_path_metric, subspace
from .ordinal import OMEGA, ONE, Ordinal, TooLarge, limit_schedule
from .rational import RationalLike, as_fraction


class EmptyInterior(LipfreeError):
    pass


class MismatchedEndpointDistance(LipfreeError):
    pass


class InvalidSchedule(LipfreeError):
    pass


@dataclass(frozen=True)
class TopBottomSpace:
    space: PointedMetricSpace
    top: int
    bottom: int

    def __post_init__(self) -> None:
        if self.top == self.bottom:
            raise ValueError("top and bottom must differ")
        if self.bottom != self.space.base:
            raise ValueError("bottom must be the basepoint")

    @property
    def length(self) -> Fraction:
        return self.space.dist(self.top, self.bottom)


@dataclass(frozen=True)
class DiamondSpec:
    n: int
    b: int

    def __post_init__(self) -> None:
        # b = 1 (a path) is the degenerate branching 2**0 used by depth-0 certificates
        if self.n < 0 or self.b < 1:
            raise ValueError("diamond needs n >= 0 and b >= 1")

    def point_count(self) -> int:
        v = 2
        for _ in range(self.n):
            v = self.b + 2 + 2 * self.b * (v - 2)
        return v


def _check_cap(count: int, cap: int | None, what: str) -> None:
    cap = DEFAULT_POINT_CAP if cap is None else cap
    if count > cap:
        raise SizeLimitExceeded(count, cap, what)


def m0() -> TopBottomSpace:
    """Two points at distance 1; bottom (label 0) is the base."""
    return TopBottomSpace(from_fractions([[0, 1], [1, 0]], 0, (0, 1)), top=1, bottom=0)


# diamonds ---------------------------------------------------------------

def _diamond_graph(n: int, b: int, memo: dict) -> tuple[list, list]:
    if n in memo:
        return memo[n]
    if n == 0:
        out = (["b", "t"], [("b", "t")])
    else:
        sub_labels, sub_edges = _diamond_graph(n - 1, b, memo)
        labels: list = ["b", "t"] + [("x", i) for i in range(b)]
        edges: list = []
        for i in range(b):
            for sign in ("+", "-"):
                top, bottom = ("t", ("x", i)) if sign == "+" else (("x", i), "b")

                def rename(lab, i=i, sign=sign, top=top, bottom=bottom):
                    if lab == "t":
                        return top
                    if lab == "b":
                        return bottom
                    return (i, sign, lab)

                labels.extend(rename(lab) for lab in sub_labels if lab not in ("t", "b"))
                edges.extend((rename(p), rename(q)) for p, q in sub_edges)
        out = (labels, edges)
    memo[n] = out
    return out


def diamond(spec: DiamondSpec | tuple[int, int], cap: int | None = None) -> TopBottomSpace:
    """D_n with branching b and unit edges; bottom is the base.

    Labels: ``"t"``, ``"b"``, ``("x", i)`` for top-level middle points and
    ``(i, sign, inner)`` for points inside the copy replacing edge (i, sign).
    """
    if not isinstance(spec, DiamondSpec):
        spec = DiamondSpec(*spec)
    _check_cap(spec.point_count(), cap, f"diamond({spec.n},{spec.b})")
    labels, edges = _diamond_graph(spec.n, spec.b, {})
    index = {lab: i for i, lab in enumerate(labels)}
    g = WeightedGraph(tuple(labels), tuple((index[p], index[q], Fraction(1)) for p, q in edges))
    space = shortest_path_metric(g, base=index["b"])
    return TopBottomSpace(space, top=index["t"], bottom=index["b"])


def diamond_copy_map(big: TopBottomSpace, small: TopBottomSpace, i: int, sign: str) -> list[int]:
    """Indices in ``big`` (level n) of the copy of ``small`` (level n-1) replacing edge (i, sign)."""
    idx = big.space.index
    top, bottom = ("t", ("x", i)) if sign == "+" else (("x", i), "b")
    out = []
    for lab in small.space.labels:
        if lab == "t":
            out.append(idx[top])
        elif lab == "b":
            out.append(idx[bottom])
        else:
            out.append(idx[(i, sign, lab)])
    return out


# chains -----------------------------------------------------------------

def _chain(tb: TopBottomSpace, k: int, s: Fraction, cap: int | None):
    if k < 0:
        raise ValueError("k must be non-negative")
    s = as_fraction(s)
    if s <= 0:
        raise ValueError("scale must be positive")
    M = tb.space
    m = len(M)
    copies = 2**k
    total = copies * (m - 1) + 1
    _check_cap(total, cap, "chain")
    others = [x for x in range(m) if x != tb.bottom]
    copy_of = np.empty(total, dtype=np.int64)
    local = np.empty(total, dtype=np.int64)
    labels = []
    maps = []
    g = 0
    prev_top = None
    for c in range(1, copies + 1):
        cmap = [0] * m
        if c == 1:
            pts = list(range(m))
        else:
            pts = others
            cmap[tb.bottom] = prev_top
        for x in pts:
            copy_of[g], local[g] = c, x
            labels.append(("c", c, M.labels[x]))
            cmap[x] = g
            g += 1
        prev_top = cmap[tb.top]
        maps.append(cmap)
    D = M.num
    dtb = int(D[tb.top, tb.bottom])
    dt = D[:, tb.top]
    db = D[:, tb.bottom]
    ci = copy_of[:, None]
    cj = copy_of[None, :]
    same = D[np.ix_(local, local)]
    up = dt[local][:, None] + (cj - ci - 1) * dtb + db[local][None, :]
    down = db[local][:, None] + (ci - cj - 1) * dtb + dt[local][None, :]
    num = np.where(ci == cj, same, np.where(ci < cj, up, down))
    if int(np.abs(num).max(initial=0)) * s.numerator >= 2**62:
        raise ValueError("chain distances overflow int64")
    space = PointedMetricSpace(tuple(labels), maps[0][tb.bottom], num * s.numerator, M.den * s.denominator)
    out = TopBottomSpace(space, top=maps[-1][tb.top], bottom=maps[0][tb.bottom])
    return out, maps


def chain(tb: TopBottomSpace, k: int, s: RationalLike = 1, cap: int | None = None) -> TopBottomSpace:
    """2**k copies of (M, s*d) glued top-to-bottom; copy 1 holds the bottom."""
    return _chain(tb, k, as_fraction(s), cap)[0]


def chain_copy_maps(tb: TopBottomSpace, k: int, s: RationalLike = 1, cap: int | None = None):
    """The chain together with, for each copy, the map M-index -> chain-index."""
    return _chain(tb, k, as_fraction(s), cap)


# l1 sums ----------------------------------------------------------------

def l1_sum(spaces: Sequence[PointedMetricSpace], cap: int | None = None) -> PointedMetricSpace:
    """Disjoint union with all basepoints identified; cross distances go through 0."""
    if not spaces:
        raise ValueError("need at least one space")
    if len(spaces) == 1:
        return spaces[0]
    total = 1 + sum(len(S) - 1 for S in spaces)
    _check_cap(total, cap, "l1 sum")
    den = math.lcm(*(S.den for S in spaces))
    labels: list = ["0"]
    blocks = []
    for j, S in enumerate(spaces):
        pts = [x for x in range(len(S)) if x != S.base]
        labels.extend((j, S.labels[x]) for x in pts)
        blocks.append((S, pts, den // S.den))
    num = np.zeros((total, total), dtype=np.int64)
    to_base = np.zeros(total, dtype=np.int64)
    block_id = np.zeros(total, dtype=np.int64)
    off = 1
    for j, (S, pts, f) in enumerate(blocks):
        sl = slice(off, off + len(pts))
        arr = np.array(pts, dtype=np.int64)
        num[sl, sl] = S.num[np.ix_(arr, arr)] * f
        to_base[sl] = S.num[arr, S.base] * f
        block_id[sl] = j + 1
        off += len(pts)
    cross = to_base[:, None] + to_base[None, :]
    diff = block_id[:, None] != block_id[None, :]
    num = np.where(diff, cross, num)
    np.fill_diagonal(num, 0)
    return PointedMetricSpace(tuple(labels), 0, num, den)


# trimming and gluing ----------------------------------------------------

def _trim(tb: TopBottomSpace, k: int):
    if k < 2:
        raise ValueError("trimming radius 2**-k must be below 1/2")
    M = tb.space
    if M.dist(tb.top, tb.bottom) != 1:
        raise ValueError("trim_P expects d(top, bottom) = 1")
    r = Fraction(1, 2**k)
    # r * den is an integer only for dyadic denominators; compare exactly instead
    lhs = np.minimum(M.num[:, tb.top], M.num[:, tb.bottom]) * r.denominator
    keep_mask = lhs >= r.numerator * M.den
    keep_mask[tb.top] = keep_mask[tb.bottom] = True
    keep = [int(x) for x in np.flatnonzero(keep_mask)]
    if len(keep) == 2:
        raise EmptyInterior(f"no interior point at distance >= 2^-{k} from top and bottom")
    sub = subspace(M, keep, tb.bottom)
    pos = {x: i for i, x in enumerate(keep)}
    return TopBottomSpace(sub, top=pos[tb.top], bottom=pos[tb.bottom]), pos


def trim_P(tb: TopBottomSpace, k: int) -> TopBottomSpace:
    """Keep top, bottom and the points at distance >= 2**-k from both."""
    return _trim(tb, k)[0]


def _glue(pieces: Sequence[TopBottomSpace], cap: int | None):
    if not pieces:
        raise ValueError("need at least one piece")
    length = pieces[0].length
    for p in pieces[1:]:
        if p.length != length:
            raise MismatchedEndpointDistance(f"top-bottom distances {length} and {p.length} differ")
    if len(pieces) == 1:
        return pieces[0], [list(range(len(pieces[0].space)))]
    total = 2 + sum(len(p.space) - 2 for p in pieces)
    _check_cap(total, cap, "glued space")
    den = math.lcm(*(p.space.den for p in pieces))
    first = pieces[0]
    labels: list = [first.space.labels[first.bottom], first.space.labels[first.top]]
    maps = []
    owner = [0, 0]
    loc = [first.bottom, first.top]
    to_b = [0, int(first.space.num[first.top, first.bottom]) * (den // first.space.den)]
    to_t = [to_b[1], 0]
    for n, p in enumerate(pieces):
        f = den // p.space.den
        pmap = [0] * len(p.space)
        pmap[p.bottom], pmap[p.top] = 0, 1
        for x in range(len(p.space)):
            if x in (p.top, p.bottom):
                continue
            pmap[x] = len(labels)
            labels.append(("p", n + 1, p.space.labels[x]))
            owner.append(n + 1)
            loc.append(x)
            to_b.append(int(p.space.num[x, p.bottom]) * f)
            to_t.append(int(p.space.num[x, p.top]) * f)
        maps.append(pmap)
    to_b_a = np.array(to_b, dtype=np.int64)
    to_t_a = np.array(to_t, dtype=np.int64)
    num = np.minimum(to_b_a[:, None] + to_b_a[None, :], to_t_a[:, None] + to_t_a[None, :])
    for n, p in enumerate(pieces):
        f = den // p.space.den
        idx = np.array(maps[n], dtype=np.int64)
        inner = [x for x in range(len(p.space)) if x not in (p.top, p.bottom)]
        if inner:
            gi = idx[inner]
            num[np.ix_(gi, gi)] = p.space.num[np.ix_(inner, inner)] * f
    np.fill_diagonal(num, 0)
    space = PointedMetricSpace(tuple(labels), 0, num, den)
    return TopBottomSpace(space, top=1, bottom=0), maps


def glue_top_bottom(pieces: Sequence[TopBottomSpace], cap: int | None = None) -> TopBottomSpace:
    """Identify all tops and all bottoms; cross distances route through top or bottom."""
    return _glue(pieces, cap)[0]


# M_alpha ----------------------------------------------------------------

def _eps_exponent(eps: Fraction) -> int:
    """k with eps = 2**(1-k); raises unless eps is such a power with k >= 2."""
    if eps <= 0 or eps.numerator != 1:
        raise InvalidSchedule(f"eps {eps} is not of the form 2^(1-k)")
    q = eps.denominator
    if q & (q - 1) or q < 2:
        raise InvalidSchedule(f"eps {eps} is not of the form 2^(1-k) with k >= 2")
    return q.bit_length()  # q = 2**(k-1)


def limits_up_to(alpha: Ordinal) -> list[Ordinal]:
    """Limit ordinals in (0, alpha]; only alpha < w^2 is supported."""
    if not alpha < Ordinal(((Ordinal.of(2), 1),)):
        raise TooLarge("M_alpha is implemented for alpha < w^2")
    c = alpha.terms[0][1] if alpha.terms and alpha.terms[0][0] == ONE else 0
    return [OMEGA.times(j) for j in range(1, c + 1)]


@dataclass
class MAlphaSpec:
    alpha: Ordinal
    eps_schedule: dict  # limit ordinal -> Fraction
    limit_sequences: dict  # limit ordinal -> [(gamma_n, k_n)]
    truncation: int
    cap: int | None = None

    @classmethod
    def canonical(cls, alpha: Ordinal, truncation: int, eps: dict | None = None, cap: int | None = None):
        """Default eps for the j-th limit is 2^-(j+1); k_n = 2k + n."""
        eps = dict(eps or {})
        limits = limits_up_to(alpha)
        sched = {}
        seqs = {}
        for j, gam in enumerate(limits, start=1):
            e = as_fraction(eps.pop(gam, Fraction(1, 2 ** (j + 1))))
            sched[gam] = e
            seqs[gam] = limit_schedule(gam, _eps_exponent(e), truncation)
        if eps:
            raise InvalidSchedule(f"eps given for non-limit or out-of-range ordinals: {sorted(map(str, eps))}")
        spec = cls(alpha, sched, seqs, truncation, cap)
        spec.check()
        return spec

    def check(self) -> None:
        if self.truncation < 1:
            raise InvalidSchedule("truncation must be at least 1")
        limits = limits_up_to(self.alpha)
        if set(limits) != set(self.eps_schedule):
            raise InvalidSchedule("eps schedule must cover exactly the limits up to alpha")
        prod = Fraction(1)
        for gam in limits:
            k = _eps_exponent(self.eps_schedule[gam])
            prod *= 1 - self.eps_schedule[gam]
            seq = self.limit_sequences[gam]
            if len(seq) < self.truncation:
                raise InvalidSchedule(f"limit {gam} has fewer than {self.truncation} pieces")
            ks = [kn for _, kn in seq]
            if any(kn <= 2 * k for kn in ks):
                raise InvalidSchedule(f"k_n must exceed 2k = {2 * k} at limit {gam}")
            if any(a >= b for a, b in zip(ks, ks[1:])):
                raise InvalidSchedule("k_n must be strictly increasing")
            for g, _ in seq:
                if not g < gam or (not g.is_zero and not g.is_limit):
                    raise InvalidSchedule(f"gamma_n {g} must be 0 or a limit below {gam}")
        if prod < Fraction(1, 2):
            raise InvalidSchedule(f"product of (1 - eps) is {prod} < 1/2")

    def mu(self, beta: Ordinal) -> Fraction:
        out = Fraction(1)
        for gam, e in self.eps_schedule.items():
            if not beta < gam:
                out *= 1 - e
        return out

    def k_of(self, gam: Ordinal) -> int:
        return _eps_exponent(self.eps_schedule[gam])


@dataclass
class PieceRecord:
    """Piece n of a limit step: survivors of M_{gamma_n + k_n} inside M_alpha."""

    n: int
    gamma: Ordinal
    k_n: int
    copy_maps: list  # survivor copies bottom-to-top, each M_gamma index -> M_alpha index
    u: int
    v: int


@dataclass
class Stage:
    alpha: Ordinal
    tb: TopBottomSpace
    prev: "Stage | None" = None
    copy_maps: list = field(default_factory=list)  # successor: two maps M_beta -> M_alpha
    pieces: list = field(default_factory=list)  # limit: PieceRecord per glued piece
    eps: Fraction | None = None  # limit: eps_alpha
    sub: dict = field(default_factory=dict)  # gamma -> Stage


@dataclass
class CertPlan:
    alpha: Ordinal
    mu: Fraction
    depth_by_piece: dict  # piece index n -> certified depth when every limit uses piece n
    stage: Stage


def _stage_depth(stage: Stage, spec: MAlphaSpec, n: int) -> int:
    if stage.alpha.is_zero:
        return 0
    if stage.prev is not None:
        return _stage_depth(stage.prev, spec, n) + 1
    piece = stage.pieces[n - 1]
    k = spec.k_of(stage.alpha)
    return _stage_depth(stage.sub[piece.gamma], spec, n) + piece.k_n - k


def m_alpha(spec: MAlphaSpec) -> tuple[TopBottomSpace, CertPlan]:
    """Finite truncation of M_alpha (first ``truncation`` pieces per limit)."""
    spec.check()
    memo: dict = {}

    def build(beta: Ordinal) -> Stage:
        if beta in memo:
            return memo[beta]
        if beta.is_zero:
            st = Stage(beta, m0())
        elif beta.is_successor:
            prev = build(beta.predecessor())
            tb, maps = _chain(prev.tb, 1, Fraction(1, 2), spec.cap)
            st = Stage(beta, tb, prev=prev, copy_maps=maps)
        else:
            k = spec.k_of(beta)
            trimmed = []
            survivors = []
            subs = {}
            for n, (gamma, k_n) in enumerate(spec.limit_sequences[beta][: spec.truncation], start=1):
                inner = build(gamma)
                subs[gamma] = inner
                full, maps = _chain(inner.tb, k_n, Fraction(1, 2**k_n), spec.cap)
                piece, pos = _trim(full, k)
                lo = 2 ** (k_n - k) + 1
                hi = 2**k_n - 2 ** (k_n - k)
                survivors.append((n, gamma, k_n, [[pos[x] for x in maps[i - 1]] for i in range(lo, hi + 1)]))
                trimmed.append(piece)
            tb, gmaps = _glue(trimmed, spec.cap)
            records = []
            for (n, gamma, k_n, cmaps), gmap in zip(survivors, gmaps):
                glued = [[gmap[x] for x in cm] for cm in cmaps]
                inner_tb = subs[gamma].tb
                records.append(
                    PieceRecord(n, gamma, k_n, glued, u=glued[-1][inner_tb.top], v=glued[0][inner_tb.bottom])
                )
            st = Stage(beta, tb, pieces=records, eps=spec.eps_schedule[beta], sub=subs)
        memo[beta] = st
        return st

    stage = build(spec.alpha)
    depths = {n: _stage_depth(stage, spec, n) for n in range(1, spec.truncation + 1)}
    return stage.tb, CertPlan(spec.alpha, spec.mu(spec.alpha), depths, stage)


def schedule_depth(spec: MAlphaSpec, n: int) -> int:
    """Finite shadow of alpha: successors add 1, a limit adds k_n - k over gamma_n."""

    def rec(beta: Ordinal) -> int:
        if beta.is_zero:
            return 0
        if beta.is_successor:
            return rec(beta.predecessor()) + 1
        gamma, k_n = spec.limit_sequences[beta][n - 1]
        return rec(gamma) + k_n - spec.k_of(beta)

    return rec(spec.alpha)


# grid rounding ----------------------------------------------------------

def grid_round(z: Sequence[RationalLike]) -> list[int]:
    """Nearest integer per coordinate, ties to even."""
    return [round(as_fraction(v)) for v in z]


def sup_distance(a: Sequence[RationalLike], b: Sequence[RationalLike]) -> Fraction:
    if len(a) != len(b):
        raise ValueError("dimension mismatch")
    return max((abs(as_fraction(x) - as_fraction(y)) for x, y in zip(a, b)), default=Fraction(0))


def distortion_of_map(
    space: PointedMetricSpace, image: Sequence, target_metric: Callable[[object, object], Fraction]
) -> tuple[Fraction, Fraction]:
    """Min and max of d_target(f x, f y) / d(x, y) over distinct pairs."""
    n = len(space)
    if n < 2:
        raise ValueError("need at least two points")
    lo = hi = None
    for i in range(n):
        for j in range(i + 1, n):
            r = as_fraction(target_metric(image[i], image[j])) / space.dist(i, j)
            lo = r if lo is None or r < lo else lo
            hi = r if hi is None or r > hi else hi
    return lo, hi
