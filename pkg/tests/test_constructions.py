import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexcyclic.constructions import (
    MockEpsilonOracle,
    direct_sum_pm,
    disk_touching_polynomial,
    epsilon_greedy_approximation,
    scale_operator,
    terms_needed,
)
from convexcyclic.convex_poly import apply_poly, eval_scalar, make_convex
from convexcyclic.core import Identity, build_operator, diagonal, operator_from_matrix, operator_norm
from convexcyclic.errors import InvalidArgument, InvalidScale, NoExponentFound, NotOutsideDisk, OracleMiss


def test_direct_sum_examples():
    np.testing.assert_array_equal(direct_sum_pm(build_operator(diagonal([2j])), "-").matrix, np.diag([2j, -2j]))
    np.testing.assert_array_equal(direct_sum_pm(build_operator(Identity(2)), "+").matrix, np.eye(4))
    with pytest.raises(InvalidArgument):
        direct_sum_pm(build_operator(Identity(2)), "*")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_minus_sum_squares_to_plus_sum(seed, d):
    rng = np.random.default_rng(seed)
    T = operator_from_matrix(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    minus = direct_sum_pm(T, "-").matrix
    plus = direct_sum_pm(T, "+").matrix
    np.testing.assert_array_equal(minus @ minus, plus @ plus)


def test_scale_examples():
    np.testing.assert_array_equal(scale_operator(build_operator(diagonal([2j])), 1.5).matrix, [[3j]])
    T = scale_operator(build_operator(Identity(3)), 2)
    assert operator_norm(T) == pytest.approx(2, rel=1e-14)
    for c in (1, 0.5, -2, 2j, float("inf")):
        with pytest.raises(InvalidScale):
            scale_operator(T, c)


def test_terms_needed():
    assert terms_needed(0.5, 1.0, 0.01) == 8  # 2/256 < 0.01 <= 2/128
    for eps, yn, delta in [(0.3, 2.0, 1e-5), (0.9, 1.0, 0.5), (0.5, 1.0, 10.0)]:
        N = terms_needed(eps, yn, delta)
        assert 2 * eps**N * yn < delta
        assert N == 1 or not 2 * eps ** (N - 1) * yn < delta


def test_epsilon_mock_example():
    y = np.array([1.0, 0.0])
    res = epsilon_greedy_approximation(None, None, y, 0.5, 0, 0.01, oracle=MockEpsilonOracle(0.5))
    assert res.n_terms == 8
    assert res.achieved_error <= 0.5**8
    assert res.polynomial.coeffs == make_convex([0] + [1 / 8] * 8).coeffs


def test_epsilon_zero_branch():
    y = np.array([0.6, 0.8j])
    res = epsilon_greedy_approximation(None, None, y, 0.5, 0, 0.01, oracle=MockEpsilonOracle(0.5, exact_at={1}))
    assert res.zero_branch_step == 1
    assert len(res.exponents) == res.n_terms
    assert res.achieved_error <= 2 * 0.5 ** res.n_terms * np.linalg.norm(y)
    assert res.achieved_error <= res.guaranteed_error


def test_epsilon_identity_misses():
    x = np.array([1.0, 2.0])
    with pytest.raises(OracleMiss) as err:
        epsilon_greedy_approximation(build_operator(Identity(2)), x, [2.0, -1.0], 0.5, 50, 0.01)
    assert err.value.step == 1
    assert err.value.partial["exponents"] == []


def test_epsilon_real_orbit_when_exact():
    T = build_operator(Identity(1))
    res = epsilon_greedy_approximation(T, [1.0], [1.0], 0.9, 5, 1.9)
    assert res.n_terms == 1 and res.exponents == [0] and res.achieved_error == 0


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.1, 0.9),
    st.integers(1, 8),
    st.integers(0, 2**32 - 1),
    st.floats(1e-6, 0.5),
    st.sampled_from([0.0, 0.9]),
)
def test_epsilon_contract_with_mock(eps, d, seed, delta, rho_min):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    y /= np.linalg.norm(y)
    oracle = MockEpsilonOracle(eps, seed, rho_min=rho_min)
    res = epsilon_greedy_approximation(None, None, y, eps, 0, delta, oracle=oracle)
    s = res.steps
    assert all(b <= eps * a * (1 + 1e-12) for a, b in zip(s, s[1:]))
    assert 2 * res.bound / np.linalg.norm(y) < delta
    # with rho_min = 0 long runs may take the zero-residual branch, which doubles the bound
    assert res.achieved_error <= res.guaranteed_error * (1 + 1e-9)
    if res.zero_branch_step is None:
        assert res.achieved_error <= res.bound * (1 + 1e-9)
    assert abs(np.linalg.norm(res.vectors.mean(axis=0) - y) - res.achieved_error) <= 1e-10
    assert sum(res.polynomial.coeffs) == pytest.approx(1, abs=1e-12)


def test_zero_branch_repeats_one_exponent():
    # mock exponents are step numbers; after an exact hit at step 3 the rest reuse exponent 4
    res = epsilon_greedy_approximation(
        None, None, [1.0], 0.5, 0, 0.01, oracle=MockEpsilonOracle(0.5, seed=1, exact_at={3})
    )
    N = res.n_terms
    assert res.zero_branch_step == 3
    assert res.exponents == [1, 2, 3] + [4] * (N - 3)
    assert res.polynomial.coeffs[4] == pytest.approx((N - 3) / N, rel=1e-15)


def test_epsilon_polynomial_matches_orbit_average():
    # N = 2: residual 6 is served by 4 = T^2 x, then residual 2 by T x exactly
    T = build_operator(diagonal([2]))
    res = epsilon_greedy_approximation(T, [1], [3], 0.6, 10, 2.5)
    assert res.n_terms == 2 and res.exponents == [2, 1] and res.achieved_error == 0
    v = apply_poly(res.polynomial, T, [1])
    np.testing.assert_allclose(v, res.vectors.mean(axis=0), atol=1e-12)


def test_disk_touching_examples():
    r = disk_touching_polynomial(2j)
    assert r.n == 1 and r.a == pytest.approx(0.4, rel=1e-15)
    assert r.polynomial.coeffs == pytest.approx((0.6, 0.4), rel=1e-15)
    assert abs(abs(eval_scalar(r.polynomial, 2j)) - 1) <= 1e-10
    r = disk_touching_polynomial(-2)
    assert r.n == 1 and r.a == pytest.approx(2 / 3, rel=1e-15)
    assert eval_scalar(r.polynomial, -2) == pytest.approx(-1, abs=1e-12)
    with pytest.raises(NoExponentFound):
        disk_touching_polynomial(2)
    with pytest.raises(NotOutsideDisk):
        disk_touching_polynomial(0.5j)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.001, 4), st.floats(0.01, 2 * np.pi - 0.01))
def test_disk_touching_lands_on_circle(r, theta):
    z0 = r * np.exp(1j * theta)
    res = disk_touching_polynomial(z0)
    nonzero = [a for a in res.polynomial.coeffs if a > 0]
    assert len(nonzero) == 2 and sum(nonzero) == pytest.approx(1, abs=1e-15)
    assert abs(abs(eval_scalar(res.polynomial, z0)) - 1) <= 1e-10
    assert all((z0**k).real >= 1 for k in range(1, res.n))
