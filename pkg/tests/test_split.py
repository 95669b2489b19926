import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qops import kernels
from qops.errors import IndexOutOfRange, ZeroDirection
from qops.quaternion import I, J, K, ONE, Direction, Quaternion, add, dot, hamilton, norm, scale
from qops.split import (
    MU_COUNT,
    Sign,
    SplitSpec,
    apply_map,
    mu,
    mu_index,
    split,
    split_array,
    split_pair,
)

TOL = 1e-12

coef = st.floats(-5, 5, allow_nan=False)
quats = st.builds(Quaternion, coef, coef, coef, coef)
vec3 = st.tuples(coef, coef, coef).filter(lambda v: math.hypot(*v) > 1e-2)
units = vec3.map(lambda v: Direction(*v).normalized())


def close(p, q, tol=TOL):
    return np.allclose(p.as_tuple(), q.as_tuple(), rtol=0, atol=tol)


def test_mu_catalog():
    assert mu(1) == Direction(1, 0, 0)
    s3 = 1 / math.sqrt(3)
    assert np.allclose(mu(7).as_tuple(), (s3, s3, s3), rtol=0, atol=1e-15)
    s2 = 1 / math.sqrt(2)
    assert np.allclose(mu(8).as_tuple(), (-s2, s2, 0), rtol=0, atol=1e-15)
    assert MU_COUNT == 13
    for k in range(1, 14):
        assert abs(mu(k).length - 1) < TOL
        assert mu_index(mu(k)) == k
    assert len({mu(k) for k in range(1, 14)}) == 13
    assert mu_index(Direction(1, 1, 0)) is None


@pytest.mark.parametrize("bad", [0, 14, -1, 2.5, True])
def test_mu_index_out_of_range(bad):
    with pytest.raises(IndexOutOfRange):
        mu(bad)


def test_zero_direction_rejected():
    with pytest.raises(ZeroDirection):
        SplitSpec("plus", Direction(0, 0, 0), mu(1))
    with pytest.raises(ZeroDirection):
        SplitSpec("minus", mu(1), (0, 0, 0))


def test_sign_parse():
    assert Sign.parse("plus") is Sign.PLUS
    assert Sign.parse("-") is Sign.MINUS
    assert Sign.MINUS.label == "minus"
    with pytest.raises(ValueError):
        Sign.parse("both")


def test_apply_map_examples():
    assert apply_map(ONE, mu(1), mu(2)) == K
    q = Quaternion(0.3, -1.2, 2.0, 0.7)
    assert close(apply_map(apply_map(q, mu(1), mu(2)), mu(1), mu(2)), q)


def test_split_one_i_j():
    plus, minus = split_pair(ONE, mu(1), mu(2))
    assert plus == Quaternion(0.5, 0, 0, 0.5)
    assert minus == Quaternion(0.5, 0, 0, -0.5)
    assert split(ONE, SplitSpec("plus", mu(1), mu(2))) == plus


def test_split_f_equals_g_i():
    a, b, c, d = 1.25, -2.5, 3.75, 0.5
    plus, minus = split_pair(Quaternion(a, b, c, d), mu(1), mu(1))
    assert plus == Quaternion(0, 0, c, d)
    assert minus == Quaternion(a, b, 0, 0)


def test_gray_pixel_lies_in_minus_half():
    v = 0.4
    q = Quaternion(0, v, v, v)
    plus, minus = split_pair(q, mu(7), mu(7))
    assert close(plus, Quaternion(), 1e-15)
    assert close(minus, q, 1e-15)


@given(quats, units, units)
def test_completeness_within_rounding(q, f, g):
    # exact equality is not attainable in floating point; see the ledger
    plus, minus = split_pair(q, f, g)
    assert close(add(plus, minus), q, 4 * np.finfo(float).eps * max(1.0, norm(q)))


@given(quats, units, units)
def test_map_action(q, f, g):
    plus, minus = split_pair(q, f, g)
    assert close(apply_map(plus, f, g), plus)
    assert close(apply_map(minus, f, g), scale(-1, minus))


@given(quats, quats, units, units)
def test_orthogonality(p, q, f, g):
    p_plus, p_minus = split_pair(p, f, g)
    q_plus, q_minus = split_pair(q, f, g)
    assert abs(dot(p_plus, q_minus)) <= TOL * 25
    assert abs(dot(p_minus, q_plus)) <= TOL * 25


@given(quats, units, units, st.sampled_from(["plus", "minus"]))
def test_idempotent(q, f, g, sign):
    spec = SplitSpec(sign, f, g)
    once = split(q, spec)
    assert close(split(once, spec), once)


@given(quats, quats, st.floats(-3, 3), units, units, st.sampled_from(["plus", "minus"]))
def test_real_linear(p, q, lam, f, g, sign):
    spec = SplitSpec(sign, f, g)
    lhs = split(add(scale(lam, p), q), spec)
    rhs = add(scale(lam, split(p, spec)), split(q, spec))
    assert close(lhs, rhs, 1e-11)


def _residual(q, basis):
    A = np.array([b.as_tuple() for b in basis]).T
    coef_, *_ = np.linalg.lstsq(A, np.array(q.as_tuple()), rcond=None)
    return float(np.linalg.norm(A @ coef_ - np.array(q.as_tuple())))


@given(quats, units, units)
def test_basis_membership(q, f, g):
    fq, gq = f.as_quaternion(), g.as_quaternion()
    if norm(fq - gq) < 1e-3 or norm(fq + gq) < 1e-3:
        return
    fg = hamilton(fq, gq)
    plus, minus = split_pair(q, f, g)
    assert _residual(plus, [fq - gq, ONE + fg]) <= 1e-10
    assert _residual(minus, [fq + gq, ONE - fg]) <= 1e-10


def test_non_unit_directions_accepted():
    f, g = Direction(0.65, 0.70, 0.29), Direction(0.27, 0.57, 0.78)
    q = Quaternion(0, 0.2, 0.5, 0.9)
    plus, minus = split_pair(q, f, g)
    assert close(add(plus, minus), q, 1e-15)
    assert not SplitSpec("plus", f, g).unit


@pytest.mark.parametrize("parallel", [True, False])
@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_array_split_matches_scalar(rng, parallel, backend):
    q = rng.uniform(-1, 1, (7, 5, 4))
    spec = SplitSpec("minus", mu(4), mu(11))
    got = kernels.split_image(q, spec.f.as_tuple(), spec.g.as_tuple(), -1, parallel=parallel, backend=backend)
    want = np.array([split(Quaternion(*p), spec).as_tuple() for p in q.reshape(-1, 4)]).reshape(q.shape)
    assert got.shape == q.shape
    assert np.array_equal(got, want)


def test_split_array_both_signs_sum(rng):
    q = rng.uniform(0, 1, (9, 4))
    q[:, 0] = 0
    spec_p, spec_m = SplitSpec.from_mu("plus", 3, 8), SplitSpec.from_mu("minus", 3, 8)
    total = split_array(q, spec_p) + split_array(q, spec_m)
    assert np.allclose(total, q, rtol=0, atol=1e-15)


def test_jk_products():
    assert hamilton(J, K) == I
