"""Acceptance gate: criteria 1-9, one PASS/FAIL line each."""

from __future__ import annotations

import json
import math
import re
import subprocess
import sys
import time

import numpy as np

from conftest import VERDICTS
from tasepnum.cauchysum import g_limit_mean, g_sum, g_zero_contour
from tasepnum.limits import LimitObservation, convergence_probe, f_limit
from tasepnum.multipoint import (ObservationSet, dy_fredholm, dy_series, flat_probability,
                                 invariance_suite, joint_probability,
                                 reduction_identity_residual)
from tasepnum.periodic import PeriodicParams, admissible_period, large_period_residual, \
    periodic_probability
from tasepnum.quadrature import ContourPlan
from tasepnum.simulate import ctmc_exact, mc_joint, poisson_joint, poisson_tail
from tasepnum.symfunc import ParticleConfig, orthogonality_residual
from toy_problems import NAMES, problem

STEP1 = ParticleConfig.step(1)


def worst_of(*vals) -> float:
    """max that turns NaN into inf instead of silently dropping it"""
    arr = np.abs(np.asarray(vals, dtype=complex))
    return float(arr.max()) if np.all(np.isfinite(arr)) else math.inf


def verdict(n: int, ok: bool, detail: str, started: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail} ({time.perf_counter() - started:.1f} s)"
    print(line)
    VERDICTS.append(line)
    assert ok, line


def test_criterion_1_free_particle():
    t0 = time.perf_counter()
    worst = 0.0
    for t in (0.5, 1.0, 2.0, 3.0):
        for a in range(-1, 5):
            val = joint_probability(STEP1, ObservationSet.of([(1, a, t)])).value
            worst = worst_of(worst, abs(val - poisson_tail(a + 1, t)))
    took = time.perf_counter() - t0
    verdict(1, worst < 1e-8 and took < 10, f"max |P - Poisson tail| = {worst:.2e} < 1e-8", t0)


CTMC_CELLS = ("step-N2-a", "step-N2-b", "step-N3-a", "step-N3-b", "flat-N2", "flat-N3")


def test_criterion_2_ctmc(ctmc_cells):
    t0 = time.perf_counter()
    ok, worst = True, 0.0
    for name in CTMC_CELLS:
        rec = ctmc_cells[name]
        Y, obs = ParticleConfig(tuple(rec["Y"])), ObservationSet.of(rec["obs"])
        live, cert = ctmc_exact(Y, obs, tol=1e-12, return_certificate=True)
        gap = abs(joint_probability(Y, obs).value - rec["value"])
        ok &= gap < 1e-6 + rec["certificate"]["total"]
        ok &= abs(live - rec["value"]) <= 1e-12 + cert.total
        worst = worst_of(worst, gap)
    ok &= time.perf_counter() - t0 < 120
    verdict(2, ok, f"six cells, max |P - CTMC| = {worst:.2e} < 1e-6 + certificate", t0)


def test_criterion_3_multi_time(mc_cells):
    t0 = time.perf_counter()
    poisson_cells = [((0, 1.0), (1, 2.0)), ((-1, 0.5), (2, 3.0)), ((1, 1.5), (1, 2.5))]
    worst = 0.0
    for (a1, t1), (a2, t2) in poisson_cells:
        obs = ObservationSet.of([(1, a1, t1), (1, a2, t2)])
        val = joint_probability(STEP1, obs).value
        worst = worst_of(worst, abs(val - poisson_joint([a1 + 1, a2 + 1], [t1, t2])))
    zmax = 0.0
    for rec in mc_cells.values():
        Y, obs = ParticleConfig(tuple(rec["Y"])), ObservationSet.of(rec["obs"])
        est, se = mc_joint(Y, obs, seed=rec["seed"], samples=10 ** 6)
        zmax = worst_of(zmax, abs(joint_probability(Y, obs).value - est) / se)
    ok = worst < 1e-6 and zmax < 4 and time.perf_counter() - t0 < 300
    verdict(3, ok, f"Poisson gap {worst:.2e} < 1e-6, MC |z| max {zmax:.2f} < 4", t0)


def test_criterion_4_fredholm_series():
    t0 = time.perf_counter()
    cases = [
        (STEP1, ObservationSet.of([(1, 0, 1.0)]), []),
        (STEP1, ObservationSet.of([(1, 0, 1.0), (1, 2, 2.0)]), [0.3 + 0.2j]),
        (STEP1, ObservationSet.of([(1, 1, 0.7), (1, 1, 1.9)]), [-0.2 + 0.35j]),
        (ParticleConfig.step(2), ObservationSet.of([(2, 0, 1.2)]), []),
        (ParticleConfig((0, -2)), ObservationSet.of([(2, -1, 1.0)]), []),
    ]
    worst = 0.0
    for Y, obs, z in cases:
        plan = ContourPlan.default(obs.m, nodes=64, rmin=0.15, rmax=0.4)
        worst = worst_of(worst, abs(dy_fredholm(Y, obs, z, plan) - dy_series(Y, obs, z, plan)))
    ok = worst < 1e-6 and time.perf_counter() - t0 < 180
    verdict(4, ok, f"max |Fredholm - series| = {worst:.2e} < 1e-6", t0)


def test_criterion_5_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    orth = 0.0
    for _ in range(10):
        N = int(rng.integers(1, 5))
        ys = sorted(rng.choice(np.arange(-7, 5), N, replace=False), reverse=True)
        Y = ParticleConfig(tuple(int(y) for y in ys))
        u = complex(-0.5 + rng.uniform(0.45, 1.2) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        orth = worst_of(orth, *(orthogonality_residual(Y, u, i) for i in range(1, N + 1)))
    reg = [(STEP1, ObservationSet.of([(1, 0, 1.0), (1, 1, 2.0)])),
           (ParticleConfig((0, -2)), ObservationSet.of([(1, 1, 0.8), (2, 0, 1.5)])),
           (ParticleConfig.step(2), ObservationSet.of([(2, 0, 1.0)]))]
    inv = {"reorder": 0.0, "scaling": 0.0, "shift": 0.0, "null": 0.0}
    for Y, obs in reg:
        for k, v in invariance_suite(Y, obs).items():
            inv[k] = worst_of(inv[k], v)
    red = worst_of(reduction_identity_residual(*reg[0], 1), reduction_identity_residual(*reg[1], 1))
    low = ObservationSet.of([(1, -3, 0.8), (2, 0, 1.5)])
    red_in = reduction_identity_residual(ParticleConfig.step(2), low, 1, inside_only=True)
    fobs = ObservationSet.of([(1, -2, 0.7), (2, -2, 1.2)])
    flat = abs(flat_probability(fobs, n_particles=2).value
               - joint_probability(ParticleConfig.flat(2), fobs).value)
    ok = (orth < 1e-10 and inv["reorder"] < 1e-8 and inv["scaling"] < 1e-10
          and inv["shift"] < 1e-10 and inv["null"] < 1e-8 and red < 1e-8 and red_in < 1e-8
          and flat < 1e-8 and time.perf_counter() - t0 < 300)
    verdict(5, ok, f"orth {orth:.1e}, reorder {inv['reorder']:.1e}, scaling {inv['scaling']:.1e}, "
                   f"shift {inv['shift']:.1e}, null {inv['null']:.1e}, reduction "
                   f"{max(red, red_in):.1e}, flat delta {flat:.1e}", t0)


def test_criterion_6_periodic():
    t0 = time.perf_counter()
    cases = [
        (STEP1, 3, ObservationSet.of([(1, 1, 1.2)])),
        (STEP1, 3, ObservationSet.of([(1, 0, 1.0), (1, 1, 2.0)])),
        (ParticleConfig.step(2), 5, ObservationSet.of([(2, 1, 1.0)])),
        (ParticleConfig.step(2), 5, ObservationSet.of([(2, 0, 1.0), (1, 1, 1.5)])),
    ]
    worst = worst_of(*(large_period_residual(Y, PeriodicParams(L, Y.N), obs) for Y, L, obs in cases))
    Y, obs = ParticleConfig.step(2), ObservationSet.of([(2, 0, 1.0), (1, 1, 1.5)])
    L0 = admissible_period(Y, obs)
    lind = abs(periodic_probability(Y, PeriodicParams(L0, 2), obs).raw
               - periodic_probability(Y, PeriodicParams(L0 + 1, 2), obs).raw)
    ok = worst < 1e-6 and lind < 1e-6 and time.perf_counter() - t0 < 300
    verdict(6, ok, f"collapse residual {worst:.2e}, L-independence {lind:.2e} (< 1e-6)", t0)


def test_criterion_7_cauchy_sum():
    t0 = time.perf_counter()
    ok, finals = True, []
    for name in NAMES:
        P, zr = problem(name)
        g0 = g_zero_contour(P, zr)
        gaps = [abs(g_sum(P, [z0 * np.exp(0.3j), *zr]) - g0) for z0 in (1e-1, 1e-2, 1e-3, 1e-4)]
        ok &= all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 1e-6
        finals.append(gaps[-1])
    a, zr = problem("P1")
    b, _ = problem("P1", s=3)
    qind = abs(g_limit_mean(a, zr) - g_limit_mean(b, zr))
    ok &= qind < 1e-6 and time.perf_counter() - t0 < 60
    verdict(7, ok, f"final gaps {', '.join(f'{g:.1e}' for g in finals)}; "
                   f"q-independence {qind:.1e}", t0)


def test_criterion_8_limits():
    t0 = time.perf_counter()
    one = LimitObservation.of([(0.0, 1.0, 0.0)])
    mono = True
    for kind in ("step", "flat"):
        vals = [f_limit(kind, one.with_h([h])).value for h in (-2.0, 0.0, 2.0)]
        mono &= vals[0] <= vals[1] <= vals[2]
    hi = f_limit("step", one.with_h([8.0])).value
    lo = f_limit("step", one.with_h([-6.0])).value
    step = convergence_probe("step", one)
    flat = convergence_probe("flat", one)
    two = LimitObservation.of([(0.0, 1.0, 0.0), (0.0, 2.0, 0.0)])
    joint = f_limit("step", two).value
    f1 = step.limit
    f2 = f_limit("step", LimitObservation.of([(0.0, 2.0, 0.0)])).value
    frechet = max(0.0, f1 + f2 - 1) <= joint <= min(f1, f2)
    ok = (mono and hi > 0.999 and lo < 0.01 and step.decreasing and step.gaps[-1] < 0.02
          and flat.decreasing and flat.gaps[-1] < 0.03 and frechet
          and time.perf_counter() - t0 < 1200)
    verdict(8, ok, f"monotone {mono}, F(8)={hi:.6f}, F(-6)={lo:.2e}, step gaps "
                   f"{[round(g, 5) for g in step.gaps]}, flat gaps "
                   f"{[round(g, 5) for g in flat.gaps]}, m=2 {joint:.5f} in "
                   f"[{max(0.0, f1 + f2 - 1):.5f}, {min(f1, f2):.5f}]", t0)


def test_criterion_9_determinism():
    t0 = time.perf_counter()
    cmd = [sys.executable, "-m", "tasepnum.cli", "verify", "--seed", "3"]
    runs = [subprocess.run(cmd, capture_output=True, text=True, check=False) for _ in range(2)]
    strip = [re.sub(r'\n\s*"timestamp": "[^"]*",?', "", r.stdout) for r in runs]
    ok = all(r.returncode == 0 for r in runs) and strip[0] == strip[1] and bool(strip[0])
    ok &= json.loads(runs[0].stdout)["value"] == 1.0
    verdict(9, ok, "verify JSON byte-identical across reruns apart from the timestamp", t0)
