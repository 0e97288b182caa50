"""Certificate generators for diamonds, chains and M_alpha.

All separators are written down in closed form (signed constants on
dyadic blocks of middle points, or a distance-to-midpoint ramp); nothing
here calls an LP.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .cert import CertBuilder, DentCert
from .constructions import (
    DiamondSpec,
    MAlphaSpec,
    Stage,
    TopBottomSpace,
    chain_copy_maps,
    diamond,
    diamond_copy_map,
    m_alpha,
)
from .freenorm import FreeVector, TransportPlan
from .rational import RationalLike, as_fraction


def chain_block(
    b: CertBuilder,
    frame: int,
    inner: int,
    inner_top: int,
    inner_bottom: int,
    maps: Sequence[Sequence[int]],
    s: Fraction,
) -> int:
    """Node for the end-to-end molecule of consecutive copies ``maps`` (bottom first).

    ``inner`` certifies ``m_{top,bottom}`` in its own frame; ``maps[c]`` sends
    that frame's local indices into ``frame``, multiplying distances by ``s``.
    The count of copies must be a power of two.
    """
    count = len(maps)
    if count & (count - 1):
        raise ValueError("number of copies must be a power of two")
    view = b.view(frame)
    base = b.frames[frame].base

    def rec(lo: int, hi: int) -> int:
        if hi - lo == 1:
            return b.subspace(frame, inner, maps[lo], s)
        mid = (lo + hi) // 2
        lower, upper = rec(lo, mid), rec(mid, hi)
        top = maps[hi - 1][inner_top]
        bottom = maps[lo][inner_bottom]
        m = maps[mid][inner_bottom]
        shift = view.dist(base, m)
        sep = {z: view.dist(z, m) - shift for z in {top, m, bottom, base}}
        return b.midpoint(frame, upper, lower, sep)

    return rec(0, count)


# diamonds ---------------------------------------------------------------

def gen_diamond_cert(n: int, k: int, b: int | None = None, cap: int | None = None) -> tuple[TopBottomSpace, DentCert]:
    """Depth n*k, eps 1 certificate for ``m_{t,b}`` over D_n with branching b >= 2**k."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    leaves = 2**k
    b = leaves if b is None else b
    if b < leaves:
        raise ValueError("branching must be at least 2**k")
    W = diamond(DiamondSpec(n, b), cap)
    levels = {m: diamond(DiamondSpec(m, b), cap) for m in range(1, n)}
    levels[n] = W
    builder = CertBuilder(W.space)
    frames = {n: list(range(len(W.space)))}
    for m in range(n, 1, -1):
        cmap = diamond_copy_map(levels[m], levels[m - 1], 0, "+")
        frames[m - 1] = [frames[m][x] for x in cmap]

    def level(m: int) -> int:
        D = levels[m]
        idx = D.space.index
        f = builder.frame(frames[m], 1, D.bottom)
        t, bot = idx["t"], idx["b"]
        xs = [idx[("x", i)] for i in range(leaves)]
        h = Fraction(2 ** (m - 1))
        if m == 1:
            ups = [builder.molecule_leaf(f, t, x, 1) for x in xs]
            downs = [builder.molecule_leaf(f, x, bot, 1) for x in xs]
        else:
            sub = level(m - 1)
            small = levels[m - 1]
            ups = [builder.subspace(f, sub, diamond_copy_map(D, small, i, "+")) for i in range(leaves)]
            downs = [builder.subspace(f, sub, diamond_copy_map(D, small, i, "-")) for i in range(leaves)]

        def average(nodes: list, lo: int, hi: int, sign: int) -> int:
            if hi - lo == 1:
                return nodes[lo]
            mid = (lo + hi) // 2
            a, c = average(nodes, lo, mid, sign), average(nodes, mid, hi, sign)
            sep = {bot: Fraction(0)}
            for i in range(lo, mid):
                sep[xs[i]] = -sign * h
            for i in range(mid, hi):
                sep[xs[i]] = sign * h
            return builder.midpoint(f, a, c, sep)

        up = average(ups, 0, leaves, 1)
        down = average(downs, 0, leaves, -1)
        return builder.convex(f, [up, down], [Fraction(1, 2), Fraction(1, 2)])

    root = level(n)
    ordinal = "w" if n == 1 else f"w*{n}"
    return W, builder.build(root, ordinal)


# chains -----------------------------------------------------------------

def gen_chain_cert(
    inner: DentCert,
    inner_space: TopBottomSpace,
    l: int,
    s: RationalLike = 1,
    cap: int | None = None,
) -> tuple[TopBottomSpace, DentCert]:
    """Depth ``inner.depth + l`` certificate for the end-to-end molecule of the chain."""
    s = as_fraction(s)
    W, maps = chain_copy_maps(inner_space, l, s, cap)
    builder = CertBuilder(W.space)
    nmap = builder.import_cert(inner, maps[0], s)
    inner_root = nmap[inner.root]
    # the imported root frame is copy 1; chain maps are relative to it
    root_frame = builder.root_frame()
    src_frame = inner.frames[inner.root_node.frame]
    local = [[m[p] for p in src_frame.points] for m in maps]
    top = src_frame.points.index(inner_space.top)
    bottom = src_frame.points.index(inner_space.bottom)
    scale = s * src_frame.scale
    root = chain_block(builder, root_frame, inner_root, top, bottom, local, scale)
    label = inner.intended_ordinal
    ordinal = None if label is None else (f"{label}+{l}" if l else label)
    return W, builder.build(root, ordinal)


# M_alpha ----------------------------------------------------------------

def gen_malpha_cert(spec: MAlphaSpec, n: int) -> tuple[TopBottomSpace, DentCert]:
    """Certificate for ``m_{t_alpha, b_alpha}`` at eps mu_alpha using piece n at every limit."""
    if not 1 <= n <= spec.truncation:
        raise ValueError(f"piece index must be in 1..{spec.truncation}")
    tb, plan = m_alpha(spec)
    builder = CertBuilder(tb.space)
    memo: dict = {}

    def rec(stage: Stage, points: list, scale: Fraction, eps: Fraction) -> int:
        f = builder.frame(points, scale, stage.tb.bottom)
        key = (stage.alpha, f, eps)
        if key in memo:
            return memo[key]
        t, bot = stage.tb.top, stage.tb.bottom
        if stage.alpha.is_zero:
            node = builder.molecule_leaf(f, t, bot, eps)
        elif stage.prev is not None:
            prev = stage.prev
            maps = stage.copy_maps
            inner = rec(prev, [points[x] for x in maps[0]], scale / 2, eps)
            node = chain_block(builder, f, inner, prev.tb.top, prev.tb.bottom, maps, Fraction(1, 2))
        else:
            piece = stage.pieces[n - 1]
            k = spec.k_of(stage.alpha)
            lam = 1 - stage.eps
            sub = stage.sub[piece.gamma]
            s = Fraction(1, 2**piece.k_n)
            inner = rec(sub, [points[x] for x in piece.copy_maps[0]], scale * s, eps / lam)
            per = 2 ** (piece.k_n - k)
            blocks = len(piece.copy_maps) // per
            parts = [
                chain_block(builder, f, inner, sub.tb.top, sub.tb.bottom, piece.copy_maps[j * per : (j + 1) * per], s)
                for j in range(blocks)
            ]
            middle = builder.convex(f, parts, [Fraction(1, blocks)] * blocks)
            view = builder.view(f)
            u, v = piece.u, piece.v
            dtu, dvb = view.dist(t, u), view.dist(v, bot)
            ends = FreeVector({t: 1 / (2 * dtu), u: -1 / (2 * dtu), v: 1 / (2 * dvb), bot: -1 / (2 * dvb)})
            ball = builder.leaf(f, ends, TransportPlan({(t, u): 1 / (2 * dtu), (v, bot): 1 / (2 * dvb)}), eps)
            node = builder.dilute(f, middle, ball, lam)
        memo[key] = node
        return node

    root = rec(plan.stage, list(range(len(tb.space))), Fraction(1), plan.mu)
    return tb, builder.build(root, str(spec.alpha))
