from collections import deque
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lipfree.constructions import (
    DiamondSpec,
    EmptyInterior,
    InvalidSchedule,
    MAlphaSpec,
    MismatchedEndpointDistance,
    TopBottomSpace,
    chain,
    diamond,
    diamond_copy_map,
    distortion_of_map,
    glue_top_bottom,
    grid_round,
    l1_sum,
    m0,
    m_alpha,
    schedule_depth,
    sup_distance,
    trim_P,
)
from lipfree.errors import SizeLimitExceeded
from lipfree.metric import rescale, separation_and_diameter, validate
from lipfree.ordinal import TooLarge, parse


def reference_diamond(n, b):
    """Edge replacement on integer vertex ids, then BFS from every vertex."""
    edges = [(0, 1)]  # (top, bottom)
    count = 2
    for _ in range(n):
        new = []
        for t, bot in edges:
            for _ in range(b):
                x = count
                count += 1
                new += [(t, x), (x, bot)]
        edges = new
    # each level's edges are then replaced again; build from the finest list
    adj = {v: [] for v in range(count)}
    for p, q in edges:
        adj[p].append(q)
        adj[q].append(p)
    dist = []
    for s in range(count):
        d = {s: 0}
        queue = deque([s])
        while queue:
            p = queue.popleft()
            for q in adj[p]:
                if q not in d:
                    d[q] = d[p] + 1
                    queue.append(q)
        dist.append([d[v] for v in range(count)])
    return dist


def formula_count(n, b):
    v = b + 2
    for _ in range(n - 1):
        v = b + 2 + 2 * b * (v - 2)
    return v


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("b", [2, 3, 4])
def test_diamond_against_reference(n, b):
    D = diamond(DiamondSpec(n, b))
    ref = reference_diamond(n, b)
    assert len(D.space) == len(ref) == formula_count(n, b) == DiamondSpec(n, b).point_count()
    mine = sorted(int(x) for row in D.space.num for x in row)
    assert D.space.den == 1 and mine == sorted(x for row in ref for x in row)
    assert D.length == ref[0][1] == 2**n


@pytest.mark.parametrize("n, b", [(1, 2), (2, 3), (3, 2)])
def test_diamond_shape(n, b):
    D = diamond(DiamondSpec(n, b))
    idx = D.space.index
    validate(D.space)
    for i in range(b):
        x = idx[("x", i)]
        assert D.space.dist(x, D.top) == D.space.dist(x, D.bottom) == 2 ** (n - 1)
    assert separation_and_diameter(D.space) == (1, 2**n)
    if n == 1:
        assert len(D.space) == b + 2
        assert all(D.space.dist(idx[("x", i)], idx[("x", j)]) == 2 for i in range(b) for j in range(b) if i != j)


def test_diamond_copy_map_is_isometric():
    big, small = diamond(DiamondSpec(2, 2)), diamond(DiamondSpec(1, 2))
    for i in range(2):
        for sign in "+-":
            cmap = diamond_copy_map(big, small, i, sign)
            for a in range(len(small.space)):
                for c in range(len(small.space)):
                    assert big.space.dist(cmap[a], cmap[c]) == small.space.dist(a, c)


def test_diamond_cap():
    with pytest.raises(SizeLimitExceeded):
        diamond(DiamondSpec(7, 2))
    with pytest.raises(ValueError):
        DiamondSpec(1, 0)


def test_chain_examples():
    M = m0()
    one = chain(M, 0, 1).space
    assert (one.num.tolist(), one.den, one.base) == (M.space.num.tolist(), M.space.den, M.space.base)
    W = chain(M, 1, F(1, 2))
    assert sorted(W.space.dist(W.bottom, x) for x in range(3)) == [0, F(1, 2), 1]
    assert W.length == 1


@pytest.mark.parametrize("k, s", [(0, F(1)), (1, F(1, 3)), (2, F(5, 2)), (3, F(1, 8))])
def test_chain_length_and_links(k, s):
    D = diamond(DiamondSpec(1, 2))
    W = chain(D, k, s)
    validate(W.space)
    assert W.length == 2**k * s * D.length
    # distances inside any copy are s times the original
    labs = D.space.labels
    idx = W.space.index
    c = 2**k
    pts = [idx[("c", c, lab)] for lab in labs if lab != "b"]
    for a in range(len(pts)):
        for b_ in range(len(pts)):
            la = [x for x in labs if x != "b"]
            assert W.space.dist(pts[a], pts[b_]) == s * D.space.dist(D.space.index[la[a]], D.space.index[la[b_]])


def test_chain_of_chain():
    M = m0()
    a = chain(chain(M, 2, F(1, 3)), 1, F(1, 2))
    assert a.length == 2 ** (2 + 1) * F(1, 3) * F(1, 2) * M.length
    assert len(a.space) == len(chain(M, 3).space)


def test_l1_sum():
    M = m0().space
    assert l1_sum([M]) == M
    S = l1_sum([M, M])
    assert len(S) == 3 and S.dist(1, 2) == 2
    validate(S)
    D = diamond(DiamondSpec(1, 2)).space
    T = l1_sum([D, M, chain(m0(), 1, F(1, 3)).space])
    validate(T)
    sep = separation_and_diameter(T)[0]
    assert sep == min(
        separation_and_diameter(D)[0], F(1, 3), *(T.dist(i, j) for i in range(1, len(T)) for j in range(i + 1, len(T)))
    )


def test_trim():
    M = chain(m0(), 3, F(1, 8))  # points at multiples of 1/8
    assert len(trim_P(M, 4).space) == len(M.space)
    P = trim_P(M, 2)
    assert len(P.space) == 2 + 5  # 1/4 .. 3/4
    near = min(P.space.dist(P.top, x) for x in range(len(P.space)) if x not in (P.top, P.bottom))
    assert near == F(1, 4)
    with pytest.raises(EmptyInterior):
        trim_P(m0(), 2)
    with pytest.raises(ValueError):
        trim_P(M, 1)


@pytest.mark.parametrize("k, k_n", [(2, 5), (2, 6), (3, 8)])
def test_trim_keeps_the_middle_copies(k, k_n):
    M = chain(m0(), k_n, F(1, 2**k_n))
    P = trim_P(M, k)
    # copy i of M0 ends at i / 2^k_n; its top survives iff it is >= 2^-k from both ends
    kept = {lab[1] for lab in P.space.labels if lab[2] == 1} - {2**k_n}
    assert kept == set(range(2 ** (k_n - k), 2**k_n - 2 ** (k_n - k) + 1))


def test_glue():
    one = chain(m0(), 2, F(1, 4))
    assert glue_top_bottom([one]) == one
    two = diamond(DiamondSpec(1, 2))
    scaled = TopBottomSpace(rescale(two.space, F(1, 2)), two.top, two.bottom)
    G = glue_top_bottom([trim_P(chain(m0(), 3, F(1, 8)), 2), trim_P(scaled, 2)])
    validate(G.space)
    for x in range(len(G.space)):
        for y in range(len(G.space)):
            if G.space.labels[x][1:2] != G.space.labels[y][1:2] and x > 1 and y > 1:
                via_b = G.space.dist(x, G.bottom) + G.space.dist(G.bottom, y)
                via_t = G.space.dist(x, G.top) + G.space.dist(G.top, y)
                assert G.space.dist(x, y) == min(via_b, via_t)
    with pytest.raises(MismatchedEndpointDistance):
        glue_top_bottom([one, two])


def test_m_alpha_zero_and_finite():
    tb, plan = m_alpha(MAlphaSpec.canonical(parse("0"), 1))
    assert tb.space == m0().space and plan.mu == 1
    tb, plan = m_alpha(MAlphaSpec.canonical(parse("3"), 1))
    assert sorted(tb.space.dist(tb.bottom, x) for x in range(len(tb.space))) == [F(i, 8) for i in range(9)]
    assert plan.mu == 1


@pytest.mark.parametrize("text, trunc", [("w", 1), ("w", 3), ("w+1", 2), ("w+2", 1)])
def test_m_alpha_limits(text, trunc):
    spec = MAlphaSpec.canonical(parse(text), trunc)
    tb, plan = m_alpha(spec)
    validate(tb.space)
    assert tb.length == 1 and separation_and_diameter(tb.space)[1] == 1
    assert plan.mu == F(3, 4) >= F(1, 2)
    for n in range(1, trunc + 1):
        assert plan.depth_by_piece[n] == schedule_depth(spec, n)


def test_m_alpha_pieces():
    spec = MAlphaSpec.canonical(parse("w"), 2)
    tb, plan = m_alpha(spec)
    k = spec.k_of(parse("w"))
    assert k == 3 and spec.eps_schedule[parse("w")] == F(1, 4)
    for piece in plan.stage.pieces:
        assert piece.k_n == 2 * k + piece.n
        assert tb.space.dist(tb.top, piece.u) == tb.space.dist(piece.v, tb.bottom) == F(1, 2**k)
        assert len(piece.copy_maps) == 2**piece.k_n - 2 * 2 ** (piece.k_n - k)


def test_schedule_errors():
    with pytest.raises(TooLarge):
        MAlphaSpec.canonical(parse("w^2"), 1)
    with pytest.raises(InvalidSchedule):
        MAlphaSpec.canonical(parse("w"), 1, {parse("w"): F(1, 3)})
    with pytest.raises(InvalidSchedule):
        MAlphaSpec.canonical(parse("w"), 1, {parse("w+1"): F(1, 4)})
    with pytest.raises(InvalidSchedule):
        # (1 - 1/2)(1 - 1/2) < 1/2
        MAlphaSpec.canonical(parse("w*2"), 1, {parse("w"): F(1, 2), parse("w*2"): F(1, 2)})
    with pytest.raises(InvalidSchedule):
        MAlphaSpec.canonical(parse("w"), 0)


def test_distortion():
    sp = diamond(DiamondSpec(1, 2)).space
    ident = list(range(len(sp)))
    assert distortion_of_map(sp, ident, sp.dist) == (1, 1)
    assert distortion_of_map(sp, ident, lambda a, b: 3 * sp.dist(a, b)) == (3, 3)
    assert distortion_of_map(sp, [0] * len(sp), sp.dist)[0] == 0


def test_grid_round_ties_to_even():
    assert grid_round([F(1, 2), F(3, 2), F(-1, 2), F(7, 3)]) == [0, 2, 0, 2]


vecs = st.lists(st.builds(F, st.integers(-500, 500), st.integers(1, 20)), min_size=1, max_size=8)


@settings(max_examples=200)
@given(vecs, st.data())
def test_grid_round_properties(z, data):
    w = data.draw(st.lists(st.builds(F, st.integers(-500, 500), st.integers(1, 20)), min_size=len(z), max_size=len(z)))
    gz, gw = grid_round(z), grid_round(w)
    assert sup_distance(z, gz) <= F(1, 2)
    d = sup_distance(z, w)
    assert d - 1 <= sup_distance(gz, gw) <= d + 1
