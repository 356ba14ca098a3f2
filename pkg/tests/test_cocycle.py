import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import direct_product
from qpcocycle import cocycle as cc
from qpcocycle.cocycle import (
    CocycleError,
    CommonZeroError,
    FourierCocycle,
    StripViolation,
    UnsatisfiableNormalization,
    build_block_cocycle,
    build_su_form,
    complexify,
    evaluate,
    iterate,
    block_mu,
)
from qpcocycle.gallery import example, block_factorization_angles
from qpcocycle.torus import Translation, default_frequency

T2 = Translation(default_frequency(2))


def random_cocycle(rng, d=2, m=3, terms=4, r=1.0):
    coeffs = {}
    for _ in range(terms):
        n = tuple(int(v) for v in rng.integers(-2, 3, d))
        coeffs[n] = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / terms
    coeffs[(0,) * d] = coeffs.get((0,) * d, 0) + 2 * np.eye(m)
    return FourierCocycle(d, m, coeffs, r)


def test_constant_cocycle_evaluates_to_itself():
    C = FourierCocycle.constant(np.diag([2, 0.5]), 2)
    np.testing.assert_array_equal(C([0.3, 0.9]), np.diag([2, 0.5]))


def test_single_mode_quarter_turn():
    C = FourierCocycle(2, 2, {(1, 0): np.eye(2)})
    np.testing.assert_allclose(C([0.25, 0]), 1j * np.eye(2), atol=1e-15)


def test_su_form_at_origin():
    C = build_su_form({(0, 0): 2, (1, 0): 1}, {(0, 0): 1})
    np.testing.assert_allclose(C([0, 0]), [[3, -1], [1, 3]], atol=1e-14)
    C = build_su_form({(0, 0): 2, (1, 0): 1}, {(0, 1): 1})
    np.testing.assert_allclose(C([0, 0]), [[3, -1], [1, 3]], atol=1e-14)


def test_su_form_trivial_cases():
    np.testing.assert_allclose(build_su_form({(0, 0): 1}, {}).coeffs[(0, 0)], np.eye(2))
    np.testing.assert_allclose(build_su_form({}, {(0, 0): 1}).coeffs[(0, 0)], [[0, -1], [1, 0]])


def test_su_form_common_zero_rejected():
    with pytest.raises(CommonZeroError):
        build_su_form({(1, 0): 1, (0, 0): 1}, {(0, 1): 1, (0, 0): 1})
        # a = 1 + e(x1), b = 1 + e(x2) vanish together at (1/2, 1/2)


def test_su_form_determinant_identity():
    a = {(0, 0): 1.5, (1, -1): 0.7j, (2, 0): 0.2}
    b = {(0, 1): 1.0, (-1, 0): 0.3}
    C = build_su_form(a, b)
    X = np.random.default_rng(0).random((200, 2))
    A = C.evaluate_many(X)
    av = A[:, 0, 0]
    bv = A[:, 1, 0]
    np.testing.assert_allclose(np.linalg.det(A), np.abs(av) ** 2 + np.abs(bv) ** 2, atol=1e-12)


def test_evaluate_warns_near_singular():
    C = FourierCocycle.constant(np.diag([1.0, 0.0]), 1)
    with pytest.warns(RuntimeWarning):
        evaluate(C, [0.1])


def test_evaluate_dimension_checked():
    with pytest.raises(ValueError):
        FourierCocycle.constant(np.eye(2), 2)([0.1])


def test_construction_validation():
    with pytest.raises(CocycleError):
        FourierCocycle(2, 2, {(1,): np.eye(2)})
    with pytest.raises(CocycleError):
        FourierCocycle(1, 2, {(0,): np.eye(3)})
    with pytest.raises(CocycleError):
        FourierCocycle(1, 2, {(0,): np.eye(2)}, r=0)
    with pytest.raises(CocycleError):
        FourierCocycle(1, 1, {(0,): [[np.nan]]})


def test_iterate_constant_diagonal():
    C = FourierCocycle.constant(np.diag([2.0, 0.5]), 2)
    res = iterate(C, T2, [0.1, 0.2], 10)
    np.testing.assert_allclose(res.matrix, np.diag([1024.0, 2.0**-10]), rtol=1e-14)
    np.testing.assert_allclose(res.reassemble(), res.matrix, rtol=1e-14, atol=1e-16)


def test_iterate_one_step_is_value():
    C = random_cocycle(np.random.default_rng(1))
    x = [0.3, 0.7]
    res = iterate(C, T2, x, 1)
    np.testing.assert_allclose(res.matrix, C(x), atol=1e-14)


def test_iterate_matches_independent_product():
    C = random_cocycle(np.random.default_rng(2))
    x = [0.15, 0.85]
    for n in (5, 17, 30):
        res = iterate(C, T2, x, n)
        ref = direct_product(C, T2.omega, x, n)
        assert np.linalg.norm(res.reassemble() - ref) <= 1e-8 * np.linalg.norm(ref)
        assert np.linalg.norm(res.matrix - ref) <= 1e-10 * np.linalg.norm(ref)


def test_iterate_beyond_direct_limit_is_factored_only():
    C = FourierCocycle.constant(np.diag([2.0, 0.5]), 2)
    res = iterate(C, T2, [0, 0], 2000)
    assert res.matrix is None
    np.testing.assert_allclose(res.log_diagonal_sums(), [2000 * math.log(2), -2000 * math.log(2)],
                               rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.integers(1, 10))
def test_cocycle_law(seed, n, m):
    rng = np.random.default_rng(seed)
    C = random_cocycle(rng)
    x = rng.random(2)
    big = iterate(C, T2, x, n + m).matrix
    xm = (x + m * np.asarray(T2.omega)) % 1.0
    prod = iterate(C, T2, xm, n).matrix @ iterate(C, T2, x, m).matrix
    assert np.linalg.norm(big - prod) <= 1e-9 * np.linalg.norm(big)


def test_scalar_and_pointwise_products():
    rng = np.random.default_rng(3)
    A, B = random_cocycle(rng), random_cocycle(rng)
    x = rng.random(2)
    np.testing.assert_allclose((2j * A)(x), 2j * A(x), atol=1e-13)
    np.testing.assert_allclose((A @ B)(x), A(x) @ B(x), atol=1e-12)


# -- complexification -------------------------------------------------------


def test_complexify_zero_is_identity():
    C = random_cocycle(np.random.default_rng(4))
    D = complexify(C, [0, 0])
    assert D.coeffs.keys() == C.coeffs.keys()
    for n in C.coeffs:
        np.testing.assert_array_equal(D.coeffs[n], C.coeffs[n])


def test_complexify_single_mode_scaling():
    C = FourierCocycle(2, 1, {(1, 0): [[1.0]]})
    t = 0.1
    D = complexify(C, [t, 0])
    assert D.coeffs[(1, 0)][0, 0] == pytest.approx(math.exp(-2 * math.pi * t), rel=1e-15)


def test_complexify_phase_diag():
    C = example("phase-diag").cocycle
    D = complexify(C, [0.1, 0])
    x = np.array([0.37, 0.2])
    expected = np.diag([2 * math.exp(-0.2 * math.pi) * cmath.exp(2j * math.pi * x[0]), 0.5])
    np.testing.assert_allclose(D(x), expected, atol=1e-14)


def test_complexify_is_evaluation_off_the_real_torus():
    C = random_cocycle(np.random.default_rng(5))
    y = np.array([0.05, -0.1])
    x = np.array([0.3, 0.6])
    z = x + 1j * y
    direct = sum(M * cmath.exp(2j * math.pi * (n[0] * z[0] + n[1] * z[1])) for n, M in C.coeffs.items())
    np.testing.assert_allclose(complexify(C, y)(x), direct, atol=1e-12)


def test_complexify_strip():
    C = random_cocycle(np.random.default_rng(6), r=0.5)
    with pytest.raises(StripViolation):
        complexify(C, [0.5, 0])
    assert complexify(C, [0.2, -0.3]).r == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(st.tuples(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2)),
       st.tuples(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2)))
def test_complexify_composes(y, y2):
    C = random_cocycle(np.random.default_rng(7))
    A = complexify(complexify(C, y), y2)
    B = complexify(C, np.add(y, y2))
    assert A.coeffs.keys() == B.coeffs.keys()
    for n in A.coeffs:
        np.testing.assert_allclose(A.coeffs[n], B.coeffs[n], rtol=1e-14, atol=0)


# -- block construction -----------------------------------------------------


def test_mu_normalization():
    assert block_mu(3.0, 2, 4) == pytest.approx(1 / 3)
    assert block_mu(3.0, 1, 2) is None
    with pytest.raises(UnsatisfiableNormalization):
        block_mu(3.0, 2, 3)


def test_block_determinant_is_one():
    C = example("block-embedding").cocycle
    dets = np.linalg.det(C.grid_values(32))
    assert np.max(np.abs(dets - 1)) < 1e-12


def test_block_with_k1_m2_is_seed():
    A2 = example("triangular-jensen").cocycle
    C = build_block_cocycle(A2, 3, 1, 2, 3.0)
    x = np.array([0.1, 0.8, 0.4])
    np.testing.assert_allclose(C(x), A2(x[:2]), atol=1e-15)


def test_block_rejects_non_sl2_seed():
    with pytest.raises(CocycleError):
        build_block_cocycle(FourierCocycle.constant(2 * np.eye(2), 2), 3, 2, 4, 3.0)


def test_block_factorization_identity():
    C = example("block-embedding").cocycle
    A2 = example("triangular-jensen").cocycle
    X = np.random.default_rng(8).random((100, 3))
    assert np.max(block_factorization_angles(C, A2, 2, X)) < 1e-9


# -- JSON -------------------------------------------------------------------


def test_json_roundtrip_is_exact(tmp_path):
    C = random_cocycle(np.random.default_rng(9), d=3, m=2, r=0.7)
    path = tmp_path / "c.json"
    cc.save(C, path)
    D = cc.load(path)
    assert (D.d, D.m, D.r) == (3, 2, 0.7)
    assert D.coeffs.keys() == C.coeffs.keys()
    for n in C.coeffs:
        np.testing.assert_array_equal(D.coeffs[n], C.coeffs[n])
    assert cc.dumps(D) == cc.dumps(C)


def test_json_field_names():
    obj = cc.to_json_dict(FourierCocycle.constant(np.eye(1), 1))
    assert set(obj) == {"d", "m", "r", "coeffs"}
    assert set(obj["coeffs"][0]) == {"n", "re", "im"}


def test_json_malformed():
    with pytest.raises(CocycleError, match="malformed"):
        cc.loads('{"d": 1, "m": 1}')


def test_invertibility_certificate():
    assert FourierCocycle.constant(np.eye(2), 2).is_invertible()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        singular = FourierCocycle(1, 1, {(0,): [[1.0]], (1,): [[1.0]]})  # 1 + e(x) vanishes at 1/2
    assert not singular.is_invertible()
