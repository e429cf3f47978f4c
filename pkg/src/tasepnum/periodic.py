"""Periodic TASEP: Bethe roots of w^N (w+1)^(L-N) = z and the multi-point
formula as a nested hat-z integral of C_Y * D_Y.

D_Y is a Fredholm determinant of the same block shape as on the integers,
with contour measures replaced by discrete measures on Bethe roots, so it is
evaluated with the shared :class:`~tasepnum.multipoint.KernelAssembly`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ConvergenceError, Degenerate, InvalidInput, Unsupported
from .multipoint import (KernelAssembly, LevelNodes, ObservationSet, ProbabilityResult,
                         _cross, _delta, _finish, f_level, joint_probability,
                         saddle_scale)
from .quadrature import ContourPlan
from .symfunc import ParticleConfig, g_lambda_batch

ROOT_TOL = 1e-11
PERIODIC_IMAG = 1e-5


@dataclass(frozen=True)
class PeriodicParams:
    L: int
    N: int

    def __post_init__(self):
        if not (isinstance(self.L, int) and isinstance(self.N, int)):
            raise InvalidInput("L and N must be integers")
        if not self.L > self.N >= 1:
            raise InvalidInput(f"need L > N >= 1, got L={self.L}, N={self.N}")

    @property
    def r_c(self) -> float:
        N, L = self.N, self.L
        return math.exp(N * math.log(N) + (L - N) * math.log(L - N) - L * math.log(L))

    @property
    def w_c(self) -> float:
        return -self.N / self.L

    def q(self, w):
        return w ** self.N * (w + 1) ** (self.L - self.N)

    def J(self, w):
        """q/q' = w(w+1)/(Lw+N)."""
        return w * (w + 1) / (self.L * w + self.N)


@dataclass(frozen=True)
class BetheRootSet:
    z: complex
    left: np.ndarray
    right: np.ndarray
    residual: float


_ROOT_CACHE: dict = {}


def _newton(params: PeriodicParams, w: np.ndarray, z: complex, steps: int = 4) -> np.ndarray:
    N, L = params.N, params.L
    for _ in range(steps):
        qw = params.q(w)
        dq = qw * (N / w + (L - N) / (w + 1))
        w = w - (qw - z) / dq
    return w


def bethe_roots(params: PeriodicParams, z: complex) -> BetheRootSet:
    """All L roots, split by Re(w) against w_c into L-N left and N right roots."""
    z = complex(z)
    key = (params.N, params.L, z.real.hex(), z.imag.hex())
    hit = _ROOT_CACHE.get(key)
    if hit is not None:
        return hit
    if not 0 < abs(z) < params.r_c:
        raise Unsupported(f"|z|={abs(z):.3e} outside (0, r_c={params.r_c:.3e})")
    N, L = params.N, params.L
    coeffs = P.polymul(P.polypow([0, 1], N), P.polypow([1, 1], L - N)).astype(complex)
    coeffs[0] -= z
    roots = np.roots(coeffs[::-1])
    roots = _newton(params, roots, z)
    resid = float(np.max(np.abs(params.q(roots) - z)))
    if resid > ROOT_TOL:
        raise ConvergenceError(f"Bethe root residual {resid:.2e}", best=roots, error=resid)
    left = np.sort_complex(roots[roots.real < params.w_c])
    right = np.sort_complex(roots[roots.real >= params.w_c])
    if len(left) != L - N or len(right) != N:
        raise ConvergenceError("Bethe root classification produced the wrong counts")
    out = BetheRootSet(z, left, right, resid)
    if len(_ROOT_CACHE) > 200_000:
        _ROOT_CACHE.clear()
    _ROOT_CACHE[key] = out
    return out


def frak_h(w, z: complex, params: PeriodicParams, side: str | None = None):
    """Normalized root polynomial: prod(w - v)/w^N over right roots for left-side w,
    prod(w - u)/(w+1)^(L-N) over left roots for right-side w."""
    w = np.asarray(w, dtype=complex)
    if side is None:
        sides = np.where(w.real < params.w_c, "L", "R")
        if len(set(sides.ravel())) > 1:
            raise InvalidInput("mixed-side points need an explicit side")
        side = str(sides.ravel()[0]) if sides.size else "L"
    if side == "L" and np.any(w == 0) or side == "R" and np.any(w == -1):
        raise Degenerate("frak_h evaluated at a singular point")
    if z == 0:
        return np.ones_like(w) if w.ndim else 1.0 + 0j
    roots = bethe_roots(params, z)
    if side == "L":
        out = np.prod(1 - roots.right[None, :] / w.reshape(-1, 1), axis=1)
    else:
        out = np.prod((w.reshape(-1, 1) - roots.left[None, :]) / (w.reshape(-1, 1) + 1), axis=1)
    out = out.reshape(w.shape)
    return complex(out) if out.ndim == 0 else out


def _check_fit(Y: ParticleConfig, params: PeriodicParams) -> None:
    if Y.N != params.N:
        raise InvalidInput(f"configuration has {Y.N} particles, params say {params.N}")
    if Y.positions[0] - Y.positions[-1] > params.L - 1:
        raise InvalidInput("initial configuration does not fit on the ring")


def energy(Y: ParticleConfig, params: PeriodicParams, z: complex) -> complex:
    """prod (v+1)^(y_N+N) * G_lambda(right roots); equal to 1 at z = 0."""
    if z == 0:
        return 1.0 + 0j
    v = bethe_roots(params, z).right
    return complex(np.prod((v + 1) ** Y.anchor) * g_lambda_batch(Y.partition(), v))


def r_max_probe(Y: ParticleConfig, params: PeriodicParams, nodes: int = 64,
                floor: float = 1e-8) -> float:
    """Largest trial radius in 0.9, 0.8, ..., 0.1 (times r_c) on which the energy
    stays above ``floor`` and has winding number zero (no zeros inside)."""
    _check_fit(Y, params)
    theta = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
    for frac in np.arange(9, 0, -1) / 10:
        r = frac * params.r_c
        vals = np.array([energy(Y, params, r * np.exp(1j * th)) for th in theta])
        if np.min(np.abs(vals)) <= floor:
            continue
        dphase = np.angle(np.roll(vals, -1) / vals)
        if abs(np.sum(dphase)) < math.pi:
            return float(r)
    raise Unsupported("no admissible radius: the energy vanishes near the origin")


# C_Y ---------------------------------------------------------------------------------

def _prod(x) -> complex:
    return complex(np.prod(x)) if np.size(x) else 1.0 + 0j


def script_C(Y: ParticleConfig, params: PeriodicParams, obs: ObservationSet,
             zhat: Sequence[complex]) -> complex:
    """Prefactor * E_Y(zhat_1) * A1 * A2 * A3 over the Bethe root sets of zhat."""
    m = obs.m
    if len(zhat) != m:
        raise InvalidInput(f"need {m} hat-z values")
    N, L = params.N, params.L
    R = [bethe_roots(params, zh) for zh in zhat]
    ks = (0,) + obs.k
    aks = (0,) + tuple(a + k for a, k in zip(obs.a, obs.k))
    ts = (0.0,) + obs.t
    out = _prod([zhat[l - 1] / (zhat[l - 1] - zhat[l]) for l in range(1, m)])
    out *= energy(Y, params, zhat[0])
    for l in range(1, m + 1):
        u, v = R[l - 1].left, R[l - 1].right
        out *= _prod((-u) ** (ks[l - 1] - ks[l]))
        out *= _prod((v + 1) ** (aks[l - 1] - aks[l]) * np.exp((ts[l] - ts[l - 1]) * v))
        out *= _prod((-u) ** N) * _prod((v + 1) ** (L - N)) / _prod(v[:, None] - u[None, :])
    for l in range(2, m + 1):
        u, v = R[l - 2].left, R[l - 1].right
        out *= _prod(v[:, None] - u[None, :]) / (_prod((-u) ** N) * _prod((v + 1) ** (L - N)))
    return out


# D_Y -----------------------------------------------------------------------------------

def ch_matrix(Y: ParticleConfig, roots: BetheRootSet, us: np.ndarray | None = None) -> np.ndarray:
    """[ch_Y(v_p, u_q; z)] for right roots v_p and points u_q (default: left roots)."""
    v = roots.right
    u = roots.left if us is None else np.asarray(us, dtype=complex)
    lam = Y.partition()
    base = ((u[None, :] + 1) / (v[:, None] + 1)) ** Y.anchor
    if not any(lam):
        return base
    # swap v_p for u_q inside the full right root set
    W = np.broadcast_to(v, (len(v), len(u), len(v))).copy()
    for p in range(len(v)):
        W[p, :, p] = u
    return base * g_lambda_batch(lam, W) / g_lambda_batch(lam, v)


def _level_weights(params: PeriodicParams, zhat: Sequence[complex], level: int,
                   w: np.ndarray, side: str) -> np.ndarray:
    m = len(zhat)
    wt = params.J(w) * frak_h(w, zhat[level - 1], params, side) ** 2
    if level > 1:
        wt = wt / frak_h(w, zhat[level - 2], params, side)
    if level < m:
        wt = wt / frak_h(w, zhat[level], params, side)
    return wt


def periodic_assembly(Y: ParticleConfig, params: PeriodicParams, obs: ObservationSet,
                      zhat: Sequence[complex], scale="saddle") -> KernelAssembly:
    """Fredholm assembly with Bethe-root nodes; D_Y = assembly.det(z) with
    z_l = zhat_{l+1}/zhat_l."""
    m = obs.m
    if scale == "saddle":
        scale = saddle_scale(obs)
    R = [bethe_roots(params, zh) for zh in zhat]
    nodes, fvals = {}, {}
    for level in range(1, m + 1):
        for side, pts in (("L", R[level - 1].left), ("R", R[level - 1].right)):
            wts = _level_weights(params, zhat, level, pts, side)
            nodes[(level, side)] = LevelNodes(pts, wts, np.zeros(len(pts), dtype=int))
            fvals[(level, side)] = np.atleast_1d(f_level(level, pts, side, obs, scale))
    v, u = R[0].right, R[0].left
    level1 = ch_matrix(Y, R[0]) / (v[:, None] - u[None, :])
    return KernelAssembly(nodes, fvals, m, level1)


def _ratios(zhat: Sequence[complex]) -> list[complex]:
    return [zhat[l + 1] / zhat[l] for l in range(len(zhat) - 1)]


def script_D(Y: ParticleConfig, params: PeriodicParams, obs: ObservationSet,
             zhat: Sequence[complex]) -> complex:
    """Periodic D_Y(zhat) as a determinant over the Bethe-root measures."""
    return periodic_assembly(Y, params, obs, zhat).det(_ratios(zhat))


def script_D_series(Y: ParticleConfig, params: PeriodicParams, obs: ObservationSet,
                    zhat: Sequence[complex], scale="saddle") -> complex:
    """The same quantity by explicit enumeration of the root-tuple series.

    The summand is symmetric within each tuple and Vandermonde factors kill
    repeated roots, so each tuple sum is (n!)^2 times a sum over subsets.
    Terms with n_l > min(N, L-N) vanish, which makes the sum finite.
    """
    m = obs.m
    if scale == "saddle":
        scale = saddle_scale(obs)
    R = [bethe_roots(params, zh) for zh in zhat]
    z = _ratios(zhat)
    ch = ch_matrix(Y, R[0])

    def weights(level, side):
        pts = R[level - 1].left if side == "L" else R[level - 1].right
        f = np.atleast_1d(f_level(level, pts, side, obs, scale))
        return f * _level_weights(params, zhat, level, pts, side)

    wl = {l: weights(l, "L") for l in range(1, m + 1)}
    wr = {l: weights(l, "R") for l in range(1, m + 1)}
    cap = min(params.N, params.L - params.N)
    total = 0.0 + 0j
    for n in itertools.product(range(cap + 1), repeat=m):
        for picks in itertools.product(*[
                itertools.product(itertools.combinations(range(len(R[l].left)), n[l]),
                                  itertools.combinations(range(len(R[l].right)), n[l]))
                for l in range(m)]):
            U = [list(R[l].left[list(pi)]) for l, (pi, _) in enumerate(picks)]
            V = [list(R[l].right[list(pj)]) for l, (_, pj) in enumerate(picks)]
            term = (-1) ** (n[0] * (n[0] + 1) // 2) + 0j
            if n[0]:
                pi, pj = picks[0]
                K = ch[np.ix_(pj, pi)] / (np.array(V[0])[:, None] - np.array(U[0])[None, :])
                term *= _cross(U[0], V[0]) / (_delta(U[0]) * _delta(V[0])) * np.linalg.det(K)
            for l in range(m):
                pi, pj = picks[l]
                term *= (_delta(U[l]) * _delta(V[l])) ** 2 / _cross(U[l], V[l]) ** 2
                term *= _prod(wl[l + 1][list(pi)]) * _prod(wr[l + 1][list(pj)])
            for l in range(m - 1):
                term *= (_cross(U[l], V[l + 1]) * _cross(V[l], U[l + 1])
                         / (_cross(U[l], U[l + 1]) * _cross(V[l], V[l + 1])))
                term *= (1 - z[l]) ** n[l] * (1 - 1 / z[l]) ** n[l + 1]
            total += term
    return complex(total)


@dataclass(frozen=True)
class HatZPlan:
    radii: tuple[float, ...]
    nodes: int = 64


def default_hat_plan(Y: ParticleConfig, params: PeriodicParams, m: int,
                     nodes: int = 64, shrink: float = 0.5, ratio: float = 0.6) -> HatZPlan:
    r_sel = shrink * r_max_probe(Y, params)
    return HatZPlan(tuple(r_sel * ratio ** l for l in range(m)), nodes)


def periodic_probability(Y: ParticleConfig, params: PeriodicParams, obs: ObservationSet,
                         plan: HatZPlan | None = None) -> ProbabilityResult:
    """Nested hat-z tensor integral of C_Y * D_Y with measure prod d zhat/(2 pi i zhat)."""
    _check_fit(Y, params)
    obs.check(Y)
    m = obs.m
    plan = plan or default_hat_plan(Y, params, m)
    if len(plan.radii) != m or any(b >= a for a, b in zip(plan.radii, plan.radii[1:])):
        raise InvalidInput("hat-z radii must be m strictly decreasing values")
    n = plan.nodes
    grid = [r * np.exp(2j * math.pi * np.arange(n) / n) for r in plan.radii]
    vals = np.empty([n] * m, dtype=complex)
    for idx in itertools.product(range(n), repeat=m):
        zh = [grid[a][b] for a, b in enumerate(idx)]
        vals[idx] = script_C(Y, params, obs, zh) * script_D(Y, params, obs, zh)
    full = complex(np.mean(vals))
    half = complex(np.mean(vals[tuple(slice(None, None, 2) for _ in range(m))]))
    meta = {"L": params.L, "N": params.N, "radii": list(plan.radii), "nodes": n}
    return _finish(full, abs(full - half), "periodic", meta, tol_imag=PERIODIC_IMAG)


def admissible_period(Y: ParticleConfig, obs: ObservationSet) -> int:
    """Smallest L with the ring collapse property: max(a+k) - y_N, and at least
    the ring fit y_1 - y_N + 1 and N + 1."""
    need = max(a + k for a, k in zip(obs.a, obs.k)) - Y.positions[-1]
    return max(need, Y.positions[0] - Y.positions[-1] + 1, Y.N + 1)


def large_period_residual(Y: ParticleConfig, params: PeriodicParams, obs: ObservationSet,
                          plan: HatZPlan | None = None,
                          line_plan: ContourPlan | None = None) -> float:
    """|periodic value - value on the integers| for an admissible period."""
    need = max(a + k for a, k in zip(obs.a, obs.k)) - Y.positions[-1]
    if params.L < need:
        raise InvalidInput(f"period {params.L} below the collapse bound {need}")
    per = periodic_probability(Y, params, obs, plan)
    line = joint_probability(Y, obs, line_plan)
    return abs(per.raw - line.raw)
