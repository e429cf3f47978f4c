from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from tasepnum.errors import InvalidInput, Unsupported
from tasepnum.multipoint import ObservationSet
from tasepnum.simulate import ctmc_exact, mc_joint, poisson_joint, poisson_tail
from tasepnum.symfunc import ParticleConfig

STEP1 = ParticleConfig.step(1)


def test_poisson_examples():
    assert poisson_joint([1], [1.0]) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert poisson_joint([1, 2], [1.0, 2.0]) == pytest.approx(1 - math.exp(-1) - math.exp(-2), abs=1e-14)
    assert poisson_joint([0, -3], [0.5, 1.0]) == 1.0
    assert poisson_tail(0, 2.0) == 1.0
    with pytest.raises(InvalidInput):
        poisson_joint([1, 1], [2.0, 1.0])


@given(st.integers(-2, 8), st.floats(0.05, 4.0))
def test_poisson_joint_single_is_tail(b, t):
    assert abs(poisson_joint([b], [t]) - poisson_tail(b, t)) < 1e-13


@given(st.integers(-1, 6), st.floats(0.1, 3.0))
def test_ctmc_one_particle_is_poisson(a, t):
    obs = ObservationSet.of([(1, a, t)])
    val, cert = ctmc_exact(STEP1, obs, tol=1e-12, return_certificate=True)
    assert abs(val - poisson_tail(a + 1, t)) < 1e-12 + cert.total


def test_ctmc_masking_reproduces_two_time_poisson():
    obs = ObservationSet.of([(1, 0, 1.0), (1, 1, 2.0)])
    assert abs(ctmc_exact(STEP1, obs, tol=1e-12) - (1 - math.exp(-1) - math.exp(-2))) < 1e-12


def test_ctmc_frozen_cells(ctmc_cells):
    for rec in ctmc_cells.values():
        val = ctmc_exact(ParticleConfig(tuple(rec["Y"])), ObservationSet.of(rec["obs"]), tol=1e-12)
        assert abs(val - rec["value"]) < 1e-12 + rec["certificate"]["total"]


def test_ctmc_truncation_is_stable():
    Y = ParticleConfig.step(2)
    obs = ObservationSet.of([(2, -1, 1.0)])
    val, cert = ctmc_exact(Y, obs, tol=1e-10, return_certificate=True)
    wider = ctmc_exact(Y, obs, tol=1e-10, K=cert.K + 5)
    assert abs(wider - val) <= cert.total + 1e-14
    assert cert.total < 1e-10


def test_ctmc_guards():
    with pytest.raises(Unsupported):
        ctmc_exact(ParticleConfig.step(5), ObservationSet.of([(1, 0, 1.0)]))
    with pytest.raises(InvalidInput):
        ctmc_exact(STEP1, ObservationSet.of([(1, 0, 1.0)]), tol=1e-16)


def test_sure_event_all_oracles():
    Y = ParticleConfig.step(2)
    obs = ObservationSet.of([(1, -50, 1.0), (2, -50, 2.0)])
    val, cert = ctmc_exact(Y, obs, return_certificate=True)
    assert abs(val - 1.0) <= cert.total
    assert mc_joint(Y, obs, seed=1, samples=2000)[0] == 1.0
    assert poisson_joint([-50], [1.0]) == 1.0


def test_mc_single_particle():
    p, se = mc_joint(STEP1, ObservationSet.of([(1, 0, 1.0)]), seed=5, samples=10**6)
    assert abs(p - (1 - math.exp(-1))) < 4 * se
    assert se < 5e-4


def test_mc_is_reproducible():
    obs = ObservationSet.of([(2, -1, 1.0)])
    a = mc_joint(ParticleConfig.step(2), obs, seed=9, samples=50_000)
    b = mc_joint(ParticleConfig.step(2), obs, seed=9, samples=50_000)
    assert a == b


def test_mc_ring_single_particle_is_free():
    obs = ObservationSet.of([(1, 1, 1.5)])
    p, se = mc_joint(STEP1, obs, seed=4, samples=200_000, L=2)
    assert abs(p - poisson_tail(2, 1.5)) < 4 * se


def test_mc_against_ctmc_fixtures(mc_cells):
    for rec in mc_cells.values():
        Y = ParticleConfig(tuple(rec["Y"]))
        obs = ObservationSet.of(rec["obs"])
        p, se = mc_joint(Y, obs, seed=rec["seed"], samples=rec["samples"])
        assert p == rec["value"]
        assert abs(p - ctmc_exact(Y, obs, tol=1e-12)) < 4 * se


def test_mc_ring_fit_check():
    with pytest.raises(InvalidInput):
        mc_joint(ParticleConfig((0, -3)), ObservationSet.of([(1, 0, 1.0)]), L=3)
