"""Cauchy-type sums over nested roots of q(w) = zhat_l at toy scale.

``g_sum`` is the finite sum over root tuples weighted by J = q/q' and the
Cauchy factors; ``g_zero_contour`` is its z0 -> 0 limit written as a nested
contour integral with the signed in/out weights.  The two are compared in the
tests as an executable witness of the analytic continuation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInput, Unsupported
from .periodic import PeriodicParams, bethe_roots
from .quadrature import CircleContour, geometric_radii


def _delta(W):
    out = 1.0
    for i in range(len(W)):
        for j in range(i + 1, len(W)):
            out = out * (W[j] - W[i])
    return out


def cauchy_factor(W: Sequence, Wp: Sequence):
    """Delta(W) Delta(W') / Delta(W; W') with empty products equal to 1."""
    den = 1.0
    for a in W:
        for b in Wp:
            den = den * (a - b)
    return _delta(list(W)) * _delta(list(Wp)) / den


@dataclass(frozen=True)
class ChainSpec:
    """Sizes n_1..n_m and the index sets I^(l) (level l) and J^(l+1) (level l+1),
    0-based, that select the Cauchy factor between consecutive levels."""

    sizes: tuple[int, ...]
    I: tuple[tuple[int, ...], ...]
    J: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        m = len(self.sizes)
        if m < 1 or any(n < 0 for n in self.sizes):
            raise InvalidInput("sizes must be non-negative and non-empty")
        if len(self.I) != m - 1 or len(self.J) != m - 1:
            raise InvalidInput("need m-1 sets I and m-1 sets J")
        for l in range(m - 1):
            if any(not 0 <= i < self.sizes[l] for i in self.I[l]):
                raise InvalidInput(f"I^({l + 1}) out of range")
            if any(not 0 <= j < self.sizes[l + 1] for j in self.J[l]):
                raise InvalidInput(f"J^({l + 2}) out of range")

    @property
    def m(self) -> int:
        return len(self.sizes)

    @classmethod
    def full(cls, sizes: Sequence[int]) -> "ChainSpec":
        sizes = tuple(sizes)
        I = tuple(tuple(range(sizes[l])) for l in range(len(sizes) - 1))
        J = tuple(tuple(range(sizes[l + 1])) for l in range(len(sizes) - 1))
        return cls(sizes, I, J)

    def max_chain(self, weights: Sequence[Sequence[int]]) -> int:
        """Largest total weight along any Cauchy chain (single variables included)."""
        best = [list(w) for w in weights]
        for l in range(self.m - 1):
            for i in self.I[l]:
                for j in self.J[l]:
                    best[l + 1][j] = max(best[l + 1][j], best[l][i] + weights[l + 1][j])
        return max((max(b) for b in best if b), default=0)


@dataclass(frozen=True)
class ToyProblem:
    """q(w) = w^p (w+1)^s on the region about 0, and an integrand A.

    ``A(W, z)`` takes W as a list (one per level) of lists of complex arrays
    that broadcast together, and z = (z0, ..., z_{m-1}).  ``pole_orders``
    declares the order of the pole of A at each w = 0, per level and index.
    """

    p: int
    A: Callable
    pole_orders: tuple[tuple[int, ...], ...]
    s: int = 0
    spec: ChainSpec = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.p < 1 or self.s < 0:
            raise InvalidInput("need p >= 1 and s >= 0")
        if self.spec is None:
            raise InvalidInput("a ChainSpec is required")
        if tuple(len(o) for o in self.pole_orders) != self.spec.sizes:
            raise InvalidInput("pole orders must match the chain sizes")
        worst = self.spec.max_chain(self.pole_orders)
        if worst > self.p:
            raise InvalidInput(f"q does not dominate: chain pole order {worst} > {self.p}")

    @property
    def r_max(self) -> float:
        return 1.0 if self.s == 0 else PeriodicParams(self.p + self.s, self.p).r_c

    def q(self, w):
        return w ** self.p * (w + 1) ** self.s

    def J(self, w):
        return w * (w + 1) / ((self.p + self.s) * w + self.p)

    def roots(self, zhat: complex) -> np.ndarray:
        """The p roots of q(w) = zhat near 0."""
        if not 0 < abs(zhat) < self.r_max:
            raise Unsupported("zhat outside the punctured disk of nested level curves")
        if self.s == 0:
            base = complex(zhat) ** (1 / self.p)
            return base * np.exp(2j * math.pi * np.arange(self.p) / self.p)
        return bethe_roots(PeriodicParams(self.p + self.s, self.p), zhat).right


def _h_value(problem: ToyProblem, W: list, z: Sequence[complex]):
    spec = problem.spec
    val = problem.A(W, tuple(z))
    for l in range(spec.m - 1):
        val = val * cauchy_factor([W[l][i] for i in spec.I[l]],
                                  [W[l + 1][j] for j in spec.J[l]])
    return val


def hat_z(z: Sequence[complex]) -> list[complex]:
    out, acc = [], 1.0 + 0j
    for x in z:
        acc *= x
        out.append(acc)
    return out


def g_sum(problem: ToyProblem, z: Sequence[complex]) -> complex:
    """Exact sum over all root tuples W^(l) in R_{zhat_l}^{n_l}."""
    spec = problem.spec
    if len(z) != spec.m:
        raise InvalidInput(f"need z_0..z_{spec.m - 1}")
    if any(not 0 < abs(x) < 1 for x in z[1:]):
        raise InvalidInput("z_1..z_{m-1} must lie in the punctured unit disk")
    roots = [problem.roots(zh) for zh in hat_z(z)]
    total = 0.0 + 0j
    per_level = [itertools.product(range(len(roots[l])), repeat=spec.sizes[l])
                 for l in range(spec.m)]
    for pick in itertools.product(*[list(x) for x in per_level]):
        W = [[roots[l][i] for i in pick[l]] for l in range(spec.m)]
        wt = math.prod(problem.J(w) for lvl in W for w in lvl)
        total += complex(wt * _h_value(problem, W, z))
    return total


def g_limit_mean(problem: ToyProblem, z_rest: Sequence[complex], radius: float | None = None,
                 nodes: int = 64) -> complex:
    """G(0, z_1, ...) as the mean of g_sum over a z0 circle (analyticity in z0)."""
    r = radius if radius is not None else 0.5 * min(problem.r_max, 1.0)
    z0s = r * np.exp(2j * math.pi * (np.arange(nodes) + 0.5) / nodes)
    return complex(np.mean([g_sum(problem, [z0, *z_rest]) for z0 in z0s]))


def g_zero_contour(problem: ToyProblem, z_rest: Sequence[complex],
                   radii: Sequence[float] | None = None, nodes: int = 64) -> complex:
    """Nested-contour value of G(0, z_1, ..., z_{m-1}).

    Circles about 0 ordered out_m..out_2, level 1, in_2..in_m with radii
    ``radii`` (default geometric in [0.1, 0.5]); level-l variables carry
    1/(1-z_{l-1}) on the in circle and -z_{l-1}/(1-z_{l-1}) on the out circle.
    """
    spec = problem.spec
    m = spec.m
    if len(z_rest) != m - 1:
        raise InvalidInput(f"need z_1..z_{m - 1}")
    radii = list(radii) if radii is not None else list(geometric_radii(2 * m - 1, 0.1, 0.5))
    if len(radii) != 2 * m - 1 or any(b >= a for a, b in zip(radii, radii[1:])):
        raise InvalidInput("need 2m-1 strictly decreasing radii")

    def level_nodes(level: int):
        if level == 1:
            c = CircleContour(0.0, radii[m - 1], nodes)
            return c.points(), c.weights()
        zl = z_rest[level - 2]
        out = CircleContour(0.0, radii[m - level], nodes)
        inn = CircleContour(0.0, radii[m + level - 2], nodes)
        pts = np.concatenate([out.points(), inn.points()])
        wts = np.concatenate([out.weights() * (-zl / (1 - zl)), inn.weights() / (1 - zl)])
        return pts, wts

    variables = [(l, i) for l in range(m) for i in range(spec.sizes[l])]
    d = len(variables)
    if d == 0:
        return complex(problem.A([[] for _ in range(m)], (0.0, *z_rest)))
    if d > 3:
        raise Unsupported("toy scale is limited to three integration variables")
    W = [[None] * n for n in spec.sizes]
    weight = 1.0
    for k, (l, i) in enumerate(variables):
        pts, wts = level_nodes(l + 1)
        shape = [1] * d
        shape[k] = len(pts)
        W[l][i] = pts.reshape(shape)
        weight = weight * wts.reshape(shape)
    val = _h_value(problem, W, (0.0, *z_rest))
    return complex(np.sum(weight * val))
