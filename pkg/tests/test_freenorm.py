from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from lipfree.constructions import DiamondSpec, diamond, m0
from lipfree.freenorm import (
    EqualPoints,
    FreeVector,
    LipWitness,
    MissingValue,
    TransportPlan,
    combine,
    delta,
    kr_norm,
    lip_constant,
    lip_constant_on,
    mcshane_extend,
    molecule,
    pairing,
)
from lipfree.metric import validate

EQUILATERAL = validate([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
PATH = validate([[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]])


def test_free_vector_arithmetic():
    v = FreeVector({1: 2, 2: F(1, 3)})
    assert v - v == FreeVector()
    assert (v + delta(1)) == FreeVector({1: 3, 2: F(1, 3)})
    assert F(3) * v == v.scale(3) == combine([(2, v), (1, v)])
    assert FreeVector({0: 5, 1: 1}).reduced(0) == delta(1)
    assert 0 not in FreeVector({0: 0})


def test_molecule():
    assert molecule(m0().space, 1, 0) == FreeVector({1: 1})
    assert molecule(PATH, 3, 1) == FreeVector({3: F(1, 2), 1: F(-1, 2)})
    with pytest.raises(EqualPoints):
        molecule(PATH, 2, 2)


def test_norm_examples():
    assert kr_norm(PATH, FreeVector())[0] == 0
    for x in range(4):
        assert kr_norm(PATH, delta(x))[0] == PATH.dist(x, 0)
    assert kr_norm(EQUILATERAL, delta(1) + delta(2))[0] == 2
    assert kr_norm(EQUILATERAL, delta(1) - delta(2))[0] == 1
    # base coefficient is ignored
    assert kr_norm(PATH, FreeVector({0: 7, 2: 1}))[0] == 2


def test_lip_constant_examples():
    assert lip_constant(PATH, LipWitness({i: F(0) for i in range(4)})) == 0
    assert lip_constant(PATH, LipWitness({i: PATH.dist(i, 0) for i in range(4)})) == 1
    with pytest.raises(MissingValue):
        lip_constant(PATH, LipWitness({0: F(0)}))


def test_half_split_separator_on_diamond():
    # p on one half of the middle points, p - 2^n on the other, 0 at the bottom
    for n in (1, 2):
        D = diamond(DiamondSpec(n, 4))
        idx = D.space.index
        p = F(2 ** (n - 1))
        values = {idx["b"]: F(0)}
        values.update({idx[("x", i)]: p if i < 2 else p - 2**n for i in range(4)})
        assert lip_constant_on(D.space, values, values) <= 1
        ext = mcshane_extend(D.space, values)
        assert lip_constant(D.space, LipWitness(ext)) <= 1


def test_pairing_and_missing_value():
    f = {0: F(0), 1: F(2)}
    assert pairing(FreeVector({1: 3}), f) == 6
    assert pairing(FreeVector({0: 5, 1: 3}), f, base=0) == 6
    with pytest.raises(MissingValue):
        pairing(FreeVector({2: 1}), f)


def test_plan_carries():
    sp = PATH
    plan = TransportPlan({(2, 0): F(1)})
    assert plan.carries(sp, delta(2)) and plan.cost(sp) == 2
    assert not plan.carries(sp, delta(1))
    assert not TransportPlan({(2, 0): F(-1)}).carries(sp, -delta(2))


def test_mcshane_extension_agrees_and_is_lipschitz():
    values = {0: F(0), 2: F(1)}
    ext = mcshane_extend(PATH, values)
    assert ext[0] == 0 and ext[2] == 1
    assert lip_constant(PATH, LipWitness(ext)) <= 1


# property tests ----------------------------------------------------------

@st.composite
def spaces(draw):
    n = draw(st.integers(2, 6))
    d = [[F(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d[i][j] = d[j][i] = F(draw(st.integers(1, 20)), draw(st.integers(1, 6)))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                d[i][j] = min(d[i][j], d[i][k] + d[k][j])
    return validate(d, base=draw(st.integers(0, n - 1)))


coeff = st.builds(F, st.integers(-9, 9), st.integers(1, 5))


@st.composite
def space_and_vectors(draw, count=1):
    sp = draw(spaces())
    vs = [FreeVector({i: draw(coeff) for i in range(len(sp))}) for _ in range(count)]
    return (sp, *vs)


@settings(max_examples=80, deadline=None)
@given(space_and_vectors())
def test_duality(args):
    sp, v = args
    value, plan, dual = kr_norm(sp, v)
    assert plan.carries(sp, v)
    assert plan.cost(sp) == value == pairing(v, dual, sp.base)
    assert lip_constant(sp, dual) <= 1
    assert dual.values[sp.base] == 0


@settings(max_examples=60, deadline=None)
@given(space_and_vectors(count=2), coeff)
def test_norm_axioms(args, s):
    sp, v, w = args
    nv, nw = kr_norm(sp, v)[0], kr_norm(sp, w)[0]
    assert kr_norm(sp, v + w)[0] <= nv + nw
    assert kr_norm(sp, v.scale(s))[0] == abs(s) * nv
    # trivial upper bound: ship each coefficient straight to the base
    assert nv <= sum(abs(c) * sp.dist(i, sp.base) for i, c in v.items())


@settings(max_examples=60, deadline=None)
@given(spaces(), st.data())
def test_molecules_are_unit(sp, data):
    x = data.draw(st.integers(0, len(sp) - 1))
    y = data.draw(st.integers(0, len(sp) - 1).filter(lambda t: t != x))
    assert kr_norm(sp, molecule(sp, x, y))[0] == 1
