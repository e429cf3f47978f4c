"""Initial-condition machinery: the symmetric polynomial G_lambda, its power-sum
expansion, chi_lambda and the essential kernel K^ess_Y."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConditioningError, Degenerate, InvalidInput
from .quadrature import CircleContour, adaptive_integrate

COLLISION_TOL = 1e-12


@dataclass(frozen=True)
class ParticleConfig:
    """Initial positions y_1 > y_2 > ... > y_N."""

    positions: tuple[int, ...]

    def __post_init__(self):
        ys = tuple(int(y) for y in self.positions)
        object.__setattr__(self, "positions", ys)
        if not ys:
            raise InvalidInput("need at least one particle")
        if any(b >= a for a, b in zip(ys, ys[1:])):
            raise InvalidInput(f"positions must strictly decrease: {ys}")

    @classmethod
    def step(cls, n: int) -> "ParticleConfig":
        return cls(tuple(-i for i in range(1, n + 1)))

    @classmethod
    def flat(cls, n: int) -> "ParticleConfig":
        return cls(tuple(-2 * i for i in range(1, n + 1)))

    @property
    def N(self) -> int:
        return len(self.positions)

    @property
    def anchor(self) -> int:
        """y_N + N, the exponent shared by K^ess and the energy prefactor."""
        return self.positions[-1] + self.N

    def partition(self) -> tuple[int, ...]:
        ys = self.positions
        n = len(ys)
        return tuple((y + i) - (ys[-1] + n) for i, y in enumerate(ys, start=1))

    def shifted(self, c: int) -> "ParticleConfig":
        return ParticleConfig(tuple(y + c for y in self.positions))


def _as_partition(lam: Sequence[int]) -> tuple[int, ...]:
    lam = tuple(int(x) for x in lam)
    if any(x < 0 for x in lam) or any(b > a for a, b in zip(lam, lam[1:])):
        raise InvalidInput(f"not a partition: {lam}")
    return lam


def _vandermonde(W: np.ndarray) -> np.ndarray:
    """det[w_i^{M-j}] = prod_{i<j} (w_i - w_j) along the last axis."""
    M = W.shape[-1]
    out = np.ones(W.shape[:-1], dtype=complex)
    for i in range(M):
        for j in range(i + 1, M):
            out = out * (W[..., i] - W[..., j])
    return out


def _check_distinct(W: np.ndarray) -> None:
    M = W.shape[-1]
    for i in range(M):
        for j in range(i + 1, M):
            if np.any(np.abs(W[..., i] - W[..., j]) < COLLISION_TOL):
                raise Degenerate("colliding variables in G_lambda; perturb them")


def g_lambda_batch(lam: Sequence[int], W: np.ndarray) -> np.ndarray:
    """G_lambda evaluated on the last axis of W (shape (..., M), M >= len(lam))."""
    lam = tuple(x for x in _as_partition(lam) if x)
    W = np.asarray(W, dtype=complex)
    M = W.shape[-1]
    if M < len(lam):
        raise InvalidInput("need at least as many variables as parts")
    if not any(lam):
        return np.ones(W.shape[:-1], dtype=complex)
    _check_distinct(W)
    lam_full = np.zeros(M, dtype=int)
    lam_full[: len(lam)] = lam
    powers = M - 1 - np.arange(M)
    A = W[..., :, None] ** powers * (W[..., :, None] + 1) ** lam_full
    # row scaling before LU; the denominator is the exact Vandermonde product
    scale = np.max(np.abs(A), axis=-1)
    scale = np.where(scale > 0, scale, 1.0)
    num = np.linalg.det(A / scale[..., None]) * np.prod(scale, axis=-1)
    return num / _vandermonde(W)


def g_lambda(lam: Sequence[int], W: Sequence[complex]) -> complex:
    return complex(g_lambda_batch(lam, np.asarray(W, dtype=complex)))


# power-sum expansion -------------------------------------------------------------

def partitions_upto(n: int) -> list[tuple[int, ...]]:
    """All partitions with positive parts and weight 1..n."""
    out = []

    def rec(rem, mx, cur):
        if cur:
            out.append(tuple(cur))
        for p in range(min(rem, mx), 0, -1):
            rec(rem - p, p, cur + [p])

    rec(n, n, [])
    return sorted(out, key=lambda mu: (sum(mu), mu))


def power_sum(mu: Sequence[int], W: np.ndarray) -> np.ndarray:
    out = np.ones(W.shape[:-1], dtype=complex)
    for k in mu:
        out = out * np.sum(W ** k, axis=-1)
    return out


@lru_cache(maxsize=None)
def _power_sum_coeffs(lam: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], float], ...]:
    weight = sum(lam)
    if weight == 0:
        return ()
    mus = partitions_upto(weight)
    M = weight + 1
    rng = np.random.default_rng(20240607 + weight)
    npts = 3 * len(mus) + 10
    W = 0.6 * (rng.standard_normal((npts, M)) + 1j * rng.standard_normal((npts, M)))
    rhs = g_lambda_batch(lam, W) - 1.0
    A = np.stack([power_sum(mu, W) for mu in mus], axis=1)
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.max(np.abs(A @ coef - rhs)) / max(1.0, np.max(np.abs(rhs)))
    if resid > 1e-9 or np.max(np.abs(coef.imag)) > 1e-7:
        raise ConditioningError(f"power-sum fit residual {resid:.2e}")
    return tuple((mu, float(c.real)) for mu, c in zip(mus, coef) if abs(c) > 1e-10)


def power_sum_coeffs(lam: Sequence[int]) -> list[tuple[tuple[int, ...], float]]:
    """Coefficients c_{lambda,mu} with G_lambda = 1 + sum c p_mu (|lambda| <= 8)."""
    lam = tuple(x for x in _as_partition(lam) if x)
    if sum(lam) > 8:
        raise InvalidInput("power-sum expansion limited to |lambda| <= 8")
    return list(_power_sum_coeffs(lam))


def chi_from_coeffs(lam: Sequence[int], v: complex, u: complex) -> complex:
    """1 + sum c_{lambda,mu} prod_k (u^{mu_k} - v^{mu_k})."""
    total = 1.0 + 0j
    for mu, c in power_sum_coeffs(lam):
        total += c * math.prod(u ** k - v ** k for k in mu)
    return total


# chi and K^ess ------------------------------------------------------------------

def _chi_grid(lam: tuple[int, ...], V: np.ndarray, U: np.ndarray) -> np.ndarray:
    weight = sum(lam)
    if weight == 0:
        return np.ones(np.broadcast(V, U).shape, dtype=complex)
    if np.any(V == 0):
        raise Degenerate("chi_lambda needs v != 0")
    V, U = np.broadcast_arrays(np.asarray(V, dtype=complex), np.asarray(U, dtype=complex))
    M = weight + 1
    while True:
        xi = np.exp(2j * math.pi * np.arange(1, M) / M)
        rot = V[..., None] * xi
        if not np.any(np.abs(rot - U[..., None]) < COLLISION_TOL):
            break
        M += 1
    W = np.concatenate([U[..., None], rot], axis=-1)
    return g_lambda_batch(lam, W)


def chi_lambda(lam: Sequence[int], v, u):
    """G_lambda(u, v xi, ..., v xi^{M-1}) with xi = exp(2 pi i / M), M = |lambda|+1."""
    lam = _as_partition(lam)
    out = _chi_grid(lam, np.asarray(v), np.asarray(u))
    return complex(out) if out.ndim == 0 else out


def kess(Y: ParticleConfig, v, u):
    """K^ess_Y(v, u) = ((u+1)/(v+1))^{y_N+N} chi_lambda(v, u) / (v - u)."""
    V, U = np.broadcast_arrays(np.asarray(v, dtype=complex), np.asarray(u, dtype=complex))
    if np.any(np.abs(V - U) < COLLISION_TOL):
        raise Degenerate("K^ess evaluated on the diagonal v = u")
    e = Y.anchor
    out = ((U + 1) / (V + 1)) ** e * _chi_grid(Y.partition(), V, U) / (V - U)
    return complex(out) if out.ndim == 0 else out


def kess_matrix(Y: ParticleConfig, vs: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Matrix [K^ess_Y(v_p, u_q)]."""
    return kess(Y, np.asarray(vs)[:, None], np.asarray(us)[None, :])


def kess_flat_reduced(v, u):
    """(2v+1) / ((v-u)(u+v+1)), equivalent to the flat K^ess up to null kernels."""
    v = np.asarray(v, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if np.any(np.abs(v - u) < COLLISION_TOL) or np.any(np.abs(u + v + 1) < COLLISION_TOL):
        raise Degenerate("flat kernel pole")
    out = (2 * v + 1) / ((v - u) * (u + v + 1))
    return complex(out) if out.ndim == 0 else out


def orthogonality_residual(Y: ParticleConfig, u: complex, i: int, tol: float = 1e-13) -> float:
    """|oint_0 v^{-i}(v+1)^{y_i+i} K^ess(v,u) dv/(2 pi i) + u^{-i}(u+1)^{y_i+i}|."""
    if not 1 <= i <= Y.N:
        raise InvalidInput("index out of range")
    e = Y.positions[i - 1] + i
    r = 0.5 * min(abs(u), abs(u + 1), 1.0)
    if r <= 0:
        raise Degenerate("u too close to a singular point")

    def integrand(v):
        return v ** (-i) * (v + 1) ** e * kess(Y, v, u)

    target = u ** (-i) * (u + 1) ** e
    val, _ = adaptive_integrate(integrand, CircleContour(0.0, r, 64), tol * max(1.0, abs(target)))
    return abs(val + target)
