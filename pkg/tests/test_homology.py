import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_splitting_exists, random_factor_gf
from qpcocycle.exact import GaussianRational, ModP, RationalMatrix
from qpcocycle.homology import (
    INAPPLICABLE,
    INCONCLUSIVE,
    OBSTRUCTED,
    BettiTable,
    FactorInstance,
    MalformedFactor,
    ObstructionQuery,
    box_partitions,
    factor_splitting_exact,
    grassmann_betti,
    is_splitting,
    kunneth,
    obstruction_check,
    splitting_system,
    torus_betti,
)


def test_torus_betti():
    assert torus_betti(1).betti == (1, 1)
    assert torus_betti(2).betti == (1, 2, 1)
    assert torus_betti(3).betti == (1, 3, 3, 1)
    assert torus_betti(3)[2] == math.comb(3, 2)
    with pytest.raises(ValueError):
        torus_betti(0)


def test_grassmann_small():
    assert grassmann_betti(1, 2).betti == (1, 0, 1)
    b = grassmann_betti(2, 4)
    assert b.betti[::2] == (1, 1, 2, 1, 1)
    assert all(v == 0 for v in b.betti[1::2])
    assert b.total == 6
    with pytest.raises(ValueError):
        grassmann_betti(2, 2)


def test_box_partitions_of_2x2():
    assert sorted(box_partitions(2, 2)) == sorted([(0, 0), (1, 0), (2, 0), (1, 1), (2, 1), (2, 2)])


@pytest.mark.parametrize("m", range(2, 9))
def test_grassmann_symmetries(m):
    for k in range(1, m):
        b = grassmann_betti(k, m)
        assert b.betti == b.betti[::-1]
        assert b.betti == grassmann_betti(m - k, m).betti
        assert b.total == math.comb(m, k)
        assert len(b.betti) == 2 * k * (m - k) + 1 and b[0] == 1


def test_kunneth_examples():
    assert kunneth(torus_betti(1), torus_betti(1)).betti == torus_betti(2).betti
    point = BettiTable("pt", (1,))
    assert kunneth(grassmann_betti(2, 4), point).betti == grassmann_betti(2, 4).betti
    assert kunneth(torus_betti(2), grassmann_betti(1, 2)).betti == (1, 2, 2, 2, 1)


@pytest.mark.parametrize("d", range(1, 7))
def test_torus_is_kunneth_power(d):
    acc = torus_betti(1)
    for _ in range(d - 1):
        acc = kunneth(acc, torus_betti(1))
    assert acc.betti == torus_betti(d).betti


def test_betti_out_of_range_is_zero():
    assert torus_betti(2)[5] == 0 and torus_betti(2)[-1] == 0


# -- splittings -------------------------------------------------------------

JORDAN = FactorInstance(RationalMatrix([[1, 1], [0, 1]]), RationalMatrix([[0, 1]]), RationalMatrix([[1]]))
BLOCK = FactorInstance(RationalMatrix([[1, 0], [0, 2]]), RationalMatrix([[0, 1]]), RationalMatrix([[2]]))


def test_jordan_block_has_no_splitting():
    assert factor_splitting_exact(JORDAN) is None


def test_block_diagonal_splits():
    sigma = factor_splitting_exact(BLOCK)
    assert sigma.to_strings() == [["0"], ["1"]]
    assert is_splitting(BLOCK, sigma)


def test_identity_projection_gives_identity():
    f = RationalMatrix([["1/2", 3], [-1, "2/7"]])
    F = FactorInstance(f, RationalMatrix.identity(2), f)
    assert factor_splitting_exact(F) == RationalMatrix.identity(2)


def test_gaussian_entries():
    i = GaussianRational(0, 1)
    f = RationalMatrix([[i, 1], [0, 2]])
    F = FactorInstance(f, RationalMatrix([[0, 1]]), RationalMatrix([[2]]))
    sigma = factor_splitting_exact(F)
    # f sigma = 2 sigma with sigma = (s, 1) forces s = 1 / (2 - i)
    assert sigma == RationalMatrix([[GaussianRational(1) / GaussianRational(2, -1)], [1]])
    assert is_splitting(F, sigma)


def test_malformed_factors():
    with pytest.raises(MalformedFactor, match="shapes"):
        FactorInstance(RationalMatrix.identity(2), RationalMatrix([[1, 0, 0]]), RationalMatrix([[1]]))
    with pytest.raises(MalformedFactor, match="surjective"):
        FactorInstance(RationalMatrix.identity(2), RationalMatrix([[0, 0]]), RationalMatrix([[1]]))
    with pytest.raises(MalformedFactor, match="pi f"):
        FactorInstance(RationalMatrix([[1, 1], [0, 1]]), RationalMatrix([[1, 0]]), RationalMatrix([[1]]))


def test_system_shape():
    A, b = splitting_system(BLOCK)
    assert A.shape == (1 + 2, 2) and len(b) == 3


def to_modp(M, p):
    return RationalMatrix([[ModP(int(v), p) for v in row] for row in M])


def test_gf5_brute_force_agreement():
    rng = np.random.default_rng(2024)
    p = 5
    outcomes = set()
    for _ in range(100):
        f, pi, h = random_factor_gf(rng, p)
        F = FactorInstance(to_modp(f, p), to_modp(pi, p), to_modp(h, p))
        sigma = factor_splitting_exact(F)
        expected = brute_force_splitting_exists(f, pi, h, p)
        assert (sigma is not None) == expected
        if sigma is not None:
            assert is_splitting(F, sigma)
        outcomes.add(expected)
    assert outcomes == {True, False}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_returned_splittings_verify_over_q(seed):
    rng = np.random.default_rng(seed)
    # rational analogue of the GF(5) construction: f = P [[a, b], [0, h]] P^-1
    P = rng.integers(-3, 4, (3, 3))
    while round(np.linalg.det(P)) == 0:
        P = rng.integers(-3, 4, (3, 3))
    Pq = RationalMatrix(P.tolist())
    det = Fraction(round(np.linalg.det(P)))
    adj = np.round(np.linalg.inv(P) * float(det)).astype(int)
    Pinv = RationalMatrix([[Fraction(int(v)) / det for v in row] for row in adj])
    assert Pq @ Pinv == RationalMatrix.identity(3)
    a = int(rng.integers(-2, 3))
    h = rng.integers(-2, 3, (2, 2))
    if rng.random() < 0.5:
        h[0, 0] = a
        h[1, 0] = 0
    b = rng.integers(-2, 3, (1, 2))
    block = RationalMatrix([[a, *b[0]], [0, *h[0]], [0, *h[1]]])
    f = Pq @ block @ Pinv
    pi = RationalMatrix([[0, 1, 0], [0, 0, 1]]) @ Pinv
    F = FactorInstance(f, pi, RationalMatrix(h.tolist()))
    sigma = factor_splitting_exact(F)
    if sigma is not None:
        assert is_splitting(F, sigma)


# -- obstruction ------------------------------------------------------------


def test_obstruction_examples():
    assert obstruction_check(ObstructionQuery(2, 1, 2, True)) == OBSTRUCTED
    for k, m in ((1, 2), (2, 4), (3, 5)):
        assert obstruction_check(ObstructionQuery(1, k, m, True)) == INAPPLICABLE
    assert obstruction_check(ObstructionQuery(3, 2, 4, False)) == INCONCLUSIVE
    assert obstruction_check(ObstructionQuery(2, 1, 2, False)) == INCONCLUSIVE
    assert obstruction_check(ObstructionQuery(3, 2, 4, True)) == OBSTRUCTED


def test_obstruction_query_validation():
    with pytest.raises(ValueError):
        ObstructionQuery(0, 1, 2, True)
    with pytest.raises(ValueError):
        ObstructionQuery(2, 2, 2, True)
