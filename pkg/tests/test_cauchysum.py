from __future__ import annotations


import numpy as np
import pytest
from hypothesis import given, strategies as st

from tasepnum.cauchysum import (ChainSpec, ToyProblem, cauchy_factor, g_limit_mean, g_sum,
                                g_zero_contour, hat_z)
from tasepnum.errors import InvalidInput, Unsupported
from toy_problems import NAMES, problem

finite = dict(allow_nan=False, allow_infinity=False)


def test_cauchy_factor_small_cases():
    assert cauchy_factor([], [0.3]) == 1
    a, b = 0.2 + 0.1j, -0.4
    assert cauchy_factor([a], [b]) == pytest.approx(1 / (a - b))


@given(st.lists(st.complex_numbers(max_magnitude=1, **finite), min_size=4, max_size=4, unique=True))
def test_cauchy_determinant(pts):
    W, Wp = pts[:2], pts[2:]
    D = np.array([[1 / (w - v) for v in Wp] for w in W])
    if not np.all(np.isfinite(D)) or min(abs(w - v) for w in W for v in Wp) < 1e-3 \
            or abs(W[0] - W[1]) < 1e-3 or abs(Wp[0] - Wp[1]) < 1e-3:
        return
    lhs = cauchy_factor(W, Wp)
    assert abs(lhs - (-1) * np.linalg.det(D)) < 1e-9 * max(1, abs(lhs))


def test_chain_spec_validation():
    with pytest.raises(InvalidInput):
        ChainSpec((1, 1), ((1,),), ((0,),))
    with pytest.raises(InvalidInput):
        ChainSpec((1, 1), (), ())


def test_dominance_rejected():
    with pytest.raises(InvalidInput):
        ToyProblem(1, lambda W, z: 1 / (W[0][0] * W[1][0]), ((1,), (1,)),
                   spec=ChainSpec.full((1, 1)))
    # the same integrand is admissible for q = w^2
    ToyProblem(2, lambda W, z: 1 / (W[0][0] * W[1][0]), ((1,), (1,)), spec=ChainSpec.full((1, 1)))


def test_empty_sum():
    P = ToyProblem(1, lambda W, z: 2.5 + 0 * z[1], ((), ()), spec=ChainSpec.full((0, 0)))
    assert g_sum(P, [0.1, 0.3]) == pytest.approx(2.5)
    assert g_zero_contour(P, [0.3]) == pytest.approx(2.5)


def test_two_level_enumeration():
    g1 = lambda w: np.exp(w)
    g2 = lambda w: 1 + w ** 3
    P = ToyProblem(2, lambda W, z: g1(W[0][0]) * g2(W[1][0]), ((0,), (0,)),
                   spec=ChainSpec.full((1, 1)))
    z = [0.2 * np.exp(0.4j), 0.5 * np.exp(-0.9j)]
    zh = hat_z(z)
    r1 = np.sqrt(zh[0]) * np.array([1, -1])
    r2 = np.sqrt(zh[1]) * np.array([1, -1])
    expect = sum((w1 / 2) * (w2 / 2) * g1(w1) * g2(w2) / (w1 - w2) for w1 in r1 for w2 in r2)
    assert abs(g_sum(P, z) - expect) < 1e-14


def test_residue_value():
    # A = 1, H = 1/(w1 - w2): the inner w2 integral of a constant and the outer
    # w1 integral of a constant both vanish by residues, so the total is 0
    P = ToyProblem(2, lambda W, z: 1.0 + 0 * W[0][0] * W[1][0], ((0,), (0,)),
                   spec=ChainSpec.full((1, 1)))
    assert abs(g_zero_contour(P, [0.3 + 0.2j])) < 1e-10
    # A = 1/w2: the w1 integral gives 1/w2 only when w2 is on the inner circle
    P2 = ToyProblem(2, lambda W, z: 1 / W[1][0] + 0 * W[0][0], ((0,), (1,)),
                    spec=ChainSpec.full((1, 1)))
    z1 = 0.3 + 0.2j
    assert abs(g_zero_contour(P2, [z1]) - 1 / (1 - z1)) < 1e-10


def test_sum_symmetric_under_root_order():
    P, zr = problem("P2")
    z = [0.05 * np.exp(0.3j), *zr]
    base = g_sum(P, z)
    orig = P.roots
    object.__setattr__(P, "roots", lambda zh: orig(zh)[::-1])
    try:
        assert abs(g_sum(P, z) - base) < 1e-12 * max(1, abs(base))
    finally:
        object.__delattr__(P, "roots")


@pytest.mark.parametrize("name", NAMES)
def test_limit_sequence(name):
    P, zr = problem(name)
    g0 = g_zero_contour(P, zr)
    gaps = [abs(g_sum(P, [z0 * np.exp(0.3j), *zr]) - g0) for z0 in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


@pytest.mark.parametrize("name", NAMES)
def test_contour_radius_invariance(name):
    P, zr = problem(name)
    m = P.spec.m
    base = g_zero_contour(P, zr)
    radii = list(np.geomspace(0.55, 0.08, 2 * m - 1))
    assert abs(g_zero_contour(P, zr, radii=radii) - base) < 1e-9


def test_q_independence():
    a, zr = problem("P1")
    b, _ = problem("P1", s=3)
    assert abs(g_limit_mean(a, zr) - g_limit_mean(b, zr)) < 1e-6
    assert abs(g_limit_mean(b, zr) - g_zero_contour(a, zr)) < 1e-6


def test_no_blowup_small_z0():
    P, zr = problem("P1", s=3)
    vals = [abs(g_sum(P, [10.0 ** -j, *zr])) for j in range(2, 9)]
    assert max(vals) < 10 * min(vals)


def test_input_guards():
    P, zr = problem("P1")
    with pytest.raises(InvalidInput):
        g_sum(P, [0.1])
    with pytest.raises(InvalidInput):
        g_sum(P, [0.1, 1.2])
    with pytest.raises(Unsupported):
        g_sum(P, [1.5, 0.3])
    with pytest.raises(InvalidInput):
        g_zero_contour(P, zr, radii=[0.1, 0.2, 0.3])
