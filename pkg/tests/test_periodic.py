from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tasepnum.errors import InvalidInput, Unsupported
from tasepnum.multipoint import ObservationSet
from tasepnum.periodic import (HatZPlan, PeriodicParams, admissible_period, bethe_roots,
                               energy, frak_h, large_period_residual, periodic_probability,
                               r_max_probe, script_C, script_D, script_D_series, ch_matrix)
from tasepnum.simulate import ctmc_exact, mc_joint
from tasepnum.symfunc import ParticleConfig

STEP1 = ParticleConfig.step(1)
STEP2 = ParticleConfig.step(2)
P12 = PeriodicParams(2, 1)


def test_params():
    assert P12.r_c == pytest.approx(0.25) and P12.w_c == -0.5
    with pytest.raises(InvalidInput):
        PeriodicParams(2, 2)


def test_quadratic_roots():
    R = bethe_roots(P12, 0.1)
    s = math.sqrt(1.4)
    assert abs(R.right[0] - (-1 + s) / 2) < 1e-14
    assert abs(R.left[0] - (-1 - s) / 2) < 1e-14
    with pytest.raises(Unsupported):
        bethe_roots(P12, 0.3)


@settings(max_examples=15)
@given(st.integers(1, 4), st.integers(1, 6), st.floats(0.05, 0.95), st.floats(0, 2 * math.pi))
def test_root_sets(N, extra, frac, th):
    p = PeriodicParams(N + extra, N)
    z = frac * p.r_c * complex(math.cos(th), math.sin(th))
    R = bethe_roots(p, z)
    assert len(R.left) == p.L - N and len(R.right) == N
    allr = np.concatenate([R.left, R.right])
    assert np.max(np.abs(p.q(allr) - z)) < 1e-11
    assert np.all(R.left.real < p.w_c) and np.all(R.right.real > p.w_c)


def test_roots_collapse_as_z_shrinks():
    p = PeriodicParams(5, 2)
    prev = (np.inf, np.inf)
    for j in range(8):
        z = 0.1 * p.r_c * 2.0 ** -j
        R = bethe_roots(p, z)
        d = (np.max(np.abs(R.right)), np.max(np.abs(R.left + 1)))
        assert d[0] < prev[0] and d[1] < prev[1]
        prev = d


def test_frak_h():
    assert frak_h(-1.2, 0, P12) == 1
    v = (-1 + math.sqrt(1.4)) / 2
    assert abs(frak_h(-1.2, 0.1, P12) - (-1.2 - v) / -1.2) < 1e-13
    p = PeriodicParams(5, 2)
    w = np.array([-1.3 + 0.2j, -1.6, -1.1 - 0.4j])
    gaps = [np.abs(frak_h(w, 0.1 * p.r_c * 2.0 ** -j, p, "L") - 1) for j in range(6)]
    assert all(np.all(b < a) for a, b in zip(gaps, gaps[1:]))


def test_energy():
    assert energy(STEP2, PeriodicParams(4, 2), 0) == 1
    p = PeriodicParams(4, 2)
    z = 0.05
    v = bethe_roots(p, z).right
    assert abs(energy(STEP2, p, z) - np.prod((v + 1) ** STEP2.anchor)) < 1e-14
    flat = ParticleConfig.flat(2)
    expect = (v[0] + 1) ** -2 * (v[1] + 1) ** -2 * (v[0] + v[1] + 1)
    assert abs(energy(flat, p, z) - expect) < 1e-13


def test_r_max_probe():
    p = PeriodicParams(5, 2)
    assert r_max_probe(STEP2, p) == pytest.approx(0.9 * p.r_c)
    assert r_max_probe(ParticleConfig((3,)), PeriodicParams(4, 1)) == pytest.approx(0.9 * 27 / 256)
    # adversarial data: either a radius or an explicit refusal
    try:
        r = r_max_probe(ParticleConfig((5, -5)), PeriodicParams(12, 2))
        assert 0 < r < PeriodicParams(12, 2).r_c
    except Unsupported:
        pass


def test_script_C_collapse():
    p = PeriodicParams(3, 1)
    obs = ObservationSet.of([(1, 0, 1.0), (1, 1, 2.0)])
    z1 = 0.4 + 0.2j
    c = lambda z0: script_C(STEP1, p, obs, [z0, z0 * z1])
    extrap = 2 * c(1e-3) - c(2e-3)
    assert abs(extrap - 1 / (1 - z1)) < 1e-3
    with pytest.raises(InvalidInput):
        script_C(STEP1, p, obs, [0.01])


def test_ch_step_is_prefactor():
    p = PeriodicParams(5, 2)
    Y = ParticleConfig((0, -1))
    R = bethe_roots(p, 0.02 + 0.01j)
    expect = ((R.left[None, :] + 1) / (R.right[:, None] + 1)) ** Y.anchor
    assert np.max(np.abs(ch_matrix(Y, R) - expect)) < 1e-14


@pytest.mark.parametrize("Y,p,obs", [
    (STEP1, PeriodicParams(2, 1), ObservationSet.of([(1, 0, 1.0)])),
    (STEP2, PeriodicParams(4, 2), ObservationSet.of([(2, 0, 1.0), (1, 1, 1.5)])),
    (ParticleConfig.flat(2), PeriodicParams(5, 2), ObservationSet.of([(1, -1, 0.8)])),
])
def test_determinant_matches_series(Y, p, obs):
    zh = [0.3 * p.r_c * np.exp(0.4j * (l + 1)) * 0.6 ** l for l in range(obs.m)]
    assert abs(script_D(Y, p, obs, zh) - script_D_series(Y, p, obs, zh)) < 1e-10


def test_series_root_relabeling():
    p = PeriodicParams(4, 2)
    obs = ObservationSet.of([(2, 0, 1.0)])
    zh = [0.02 + 0.01j]
    base = script_D_series(STEP2, p, obs, zh)
    from tasepnum import periodic as mod
    orig = mod.bethe_roots

    def shuffled(params, z):
        R = orig(params, z)
        return mod.BetheRootSet(R.z, R.left[::-1].copy(), R.right[::-1].copy(), R.residual)

    mod.bethe_roots = shuffled
    try:
        assert abs(script_D_series(STEP2, p, obs, zh) - base) < 1e-12
    finally:
        mod.bethe_roots = orig


def test_single_particle_ring_is_free():
    res = periodic_probability(STEP1, P12, ObservationSet.of([(1, 0, 1.0)]))
    assert abs(res.value - (1 - math.exp(-1))) < 1e-10


def test_ring_ctmc_small_period():
    # L below the collapse bound: compare with the exact chain on the ring
    p = PeriodicParams(3, 2)
    obs = ObservationSet.of([(2, 0, 1.0), (1, 1, 1.8)])
    val = periodic_probability(STEP2, p, obs).value
    assert abs(val - ctmc_exact(STEP2, obs, tol=1e-12, L=3)) < 1e-8


def test_ring_mc():
    p = PeriodicParams(4, 2)
    obs = ObservationSet.of([(2, 0, 1.0)])
    est, se = mc_joint(STEP2, obs, seed=21, samples=10**6, L=4)
    assert abs(periodic_probability(STEP2, p, obs).value - est) < 4 * se


def test_large_period():
    obs1 = ObservationSet.of([(1, 1, 1.2)])
    assert large_period_residual(STEP1, PeriodicParams(3, 1), obs1) < 1e-7
    obs2 = ObservationSet.of([(2, 1, 1.0)])
    assert large_period_residual(STEP2, PeriodicParams(5, 2), obs2) < 1e-6
    obs3 = ObservationSet.of([(1, 0, 1.0), (1, 1, 2.0)])
    assert large_period_residual(STEP1, PeriodicParams(3, 1), obs3) < 1e-6
    with pytest.raises(InvalidInput):
        large_period_residual(STEP1, PeriodicParams(2, 1), ObservationSet.of([(1, 3, 1.0)]))


def test_period_independence():
    obs = ObservationSet.of([(2, 0, 1.0)])
    L0 = admissible_period(STEP2, obs)
    a = periodic_probability(STEP2, PeriodicParams(L0, 2), obs).value
    b = periodic_probability(STEP2, PeriodicParams(L0 + 1, 2), obs).value
    assert abs(a - b) < 1e-6


def test_plan_validation():
    with pytest.raises(InvalidInput):
        periodic_probability(STEP1, P12, ObservationSet.of([(1, 0, 1.0), (1, 1, 2.0)]),
                             HatZPlan((0.01, 0.02)))
    with pytest.raises(InvalidInput):
        periodic_probability(ParticleConfig((0, -3)), PeriodicParams(3, 2),
                             ObservationSet.of([(1, 0, 1.0)]))
