"""Finite-time multi-point distribution of TASEP on the integers.

The probability is an integral over z-circles of a Fredholm determinant
det(I - K1 KY) acting on nested circles about -1 and 0.  The determinant is
discretized by the Nystrom method; a bounded-cost series route serves as a
cross-check.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Degenerate, InvalidInput, NumericalQualityWarning, Unsupported
from .quadrature import ContourPlan, family_index
from .symfunc import ParticleConfig, kess_matrix

QUALITY_IMAG = 1e-6
SANITY_EPS = 1e-6


@dataclass(frozen=True)
class ObservationSet:
    """Triples (k, a, t): particle index, threshold site and time."""

    k: tuple[int, ...]
    a: tuple[int, ...]
    t: tuple[float, ...]

    def __post_init__(self):
        k = tuple(int(x) for x in self.k)
        a = tuple(int(x) for x in self.a)
        t = tuple(float(x) for x in self.t)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "t", t)
        if not (len(k) == len(a) == len(t)) or not k:
            raise InvalidInput("observation lists must be non-empty and of equal length")
        if any(x < 1 for x in k):
            raise InvalidInput("particle indices start at 1")
        if any(x < 0 for x in t) or any(t2 < t1 for t1, t2 in zip(t, t[1:])):
            raise InvalidInput("times must be non-negative and sorted")
        if len(set(zip(k, t))) != len(k):
            raise InvalidInput("(k, t) pairs must be distinct")

    @classmethod
    def of(cls, triples: Sequence[tuple[int, int, float]]) -> "ObservationSet":
        ks, as_, ts = zip(*triples)
        return cls(ks, as_, ts)

    @property
    def m(self) -> int:
        return len(self.k)

    def triples(self) -> list[tuple[int, int, float]]:
        return list(zip(self.k, self.a, self.t))

    def check(self, Y: ParticleConfig) -> None:
        if max(self.k) > Y.N:
            raise InvalidInput(f"particle index exceeds N={Y.N}")

    def drop(self, s: int) -> "ObservationSet":
        """Remove the s-th observation (1-based)."""
        trip = [x for i, x in enumerate(self.triples(), start=1) if i != s]
        return ObservationSet.of(trip)

    def shifted(self, c: int) -> "ObservationSet":
        return ObservationSet(self.k, tuple(x + c for x in self.a), self.t)


@dataclass
class ProbabilityResult:
    value: float
    raw: complex
    error: float
    provenance: str
    imag_residue: float = 0.0
    flags: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "raw_real": self.raw.real, "raw_imag": self.raw.imag,
                "error": self.error, "imag_residue": self.imag_residue,
                "provenance": self.provenance, "flags": list(self.flags), "meta": self.meta}


def _finish(raw: complex, error: float, provenance: str, meta: dict,
            tol_imag: float = QUALITY_IMAG) -> ProbabilityResult:
    flags = []
    imag = abs(raw.imag)
    if imag > tol_imag:
        flags.append("imag-residue")
        warnings.warn(f"imaginary residue {imag:.2e} exceeds {tol_imag:.0e}",
                      NumericalQualityWarning, stacklevel=3)
    val = raw.real
    if not -SANITY_EPS <= val <= 1 + SANITY_EPS:
        flags.append("out-of-range")
        warnings.warn(f"probability {val:.3e} outside [0, 1]", NumericalQualityWarning,
                      stacklevel=3)
        val = min(max(val, -SANITY_EPS), 1 + SANITY_EPS)
    return ProbabilityResult(val, raw, max(error, imag), provenance, imag, flags, meta)


# f_i -------------------------------------------------------------------------------

def log_F(i: int, w, obs: ObservationSet):
    """log F_i(w) = k log w - (a+k) log(w+1) + t w, with log F_0 = 0."""
    w = np.asarray(w, dtype=complex)
    if i == 0:
        return np.zeros_like(w)
    k, a, t = obs.k[i - 1], obs.a[i - 1], obs.t[i - 1]
    return k * np.log(w) - (a + k) * np.log(w + 1) + t * w


def f_level(level: int, w, side: str, obs: ObservationSet,
            scale: Sequence[complex] | None = None):
    """F_l/F_{l-1} on the left side, F_{l-1}/F_l on the right side.

    ``scale`` multiplies F_i by scale[i-1]; the determinant does not depend on it.
    """
    w = np.asarray(w, dtype=complex)
    if side == "R" and np.any(w == 0) or side == "L" and np.any(w == -1):
        raise Degenerate("f evaluated at its singular point")
    d = log_F(level, w, obs) - log_F(level - 1, w, obs)
    if scale is not None:
        c = [1.0] + list(scale)
        d = d + np.log(complex(c[level])) - np.log(complex(c[level - 1]))
    out = np.exp(d if side == "L" else -d)
    return complex(out) if out.ndim == 0 else out


def saddle_scale(obs: ObservationSet, w0: complex = -0.5) -> list[complex]:
    """c_i = 1/F_i(w0); keeps kernel entries of moderate size near the saddle."""
    return [complex(np.exp(-log_F(i, w0, obs))) for i in range(1, obs.m + 1)]


# Q factors --------------------------------------------------------------------------

def q1(j: int, z: Sequence[complex], m: int) -> complex:
    if j % 2 == 0:
        return 1 - 1 / z[j - 2]
    return 1 - z[j - 1] if j < m else 1.0


def q2(i: int, z: Sequence[complex], m: int) -> complex:
    if i == 1 or (i == m and i % 2 == 0):
        return 1.0
    if i % 2 == 0:
        return 1 - z[i - 1]
    return 1 - 1 / z[i - 2]


def s1_side(i: int) -> str:
    return "L" if i % 2 else "R"


def s2_side(j: int) -> str:
    return "R" if j % 2 else "L"


def k1_pairs(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, m + 1) for j in range(1, m + 1)
            if j == i or j == i - (-1) ** i]


def ky_pairs(m: int) -> list[tuple[int, int]]:
    """(j, i) pairs with a nonzero KY block; the (1, 1) block is the K^ess block."""
    out = [(1, 1)]
    out += [(j, i) for j in range(1, m + 1) for i in range(2, m + 1)
            if i == j or i == j + (-1) ** j]
    return out


# measured nodes ----------------------------------------------------------------------

@dataclass
class LevelNodes:
    """Points of one (level, side) with bare weights dw/(2 pi i) and a tag per
    circle that selects the z-dependent measure prefactor."""

    points: np.ndarray
    weights: np.ndarray
    tags: np.ndarray  # 0: unweighted, 1: "out", 2: "in"


def measure_factor(tag: int, zl: complex, order: str) -> complex:
    if tag == 0:
        return 1.0
    if order == "standard":
        return -zl / (1 - zl) if tag == 1 else 1 / (1 - zl)
    return 1 / (1 - zl) if tag == 1 else -zl / (1 - zl)


def plan_nodes(plan: ContourPlan, m: int, order: str = "standard") -> dict:
    """Nodes for every (level, side) from a plan, in the given nesting order.

    standard: out_m..out_2, level 1, in_2..in_m (weights use z_{l-1}).
    reversed: out_1..out_{m-1}, level m, in_{m-1}..in_1 (weights use z_l).
    """
    if plan.m != m:
        raise InvalidInput(f"plan has {plan.m} levels, observations have {m}")
    system = plan.system()
    out = {}
    for side, fam in (("L", system.left), ("R", system.right)):
        for level in range(1, m + 1):
            if order == "standard":
                if level == 1:
                    circles = [(fam[family_index(m, 1, "mid")], 0)]
                else:
                    circles = [(fam[family_index(m, level, "out")], 1),
                               (fam[family_index(m, level, "in")], 2)]
            elif order == "reversed":
                if level == m:
                    circles = [(fam[m - 1], 0)]
                else:
                    circles = [(fam[level - 1], 1), (fam[2 * m - 1 - level], 2)]
            else:
                raise InvalidInput(f"unknown nesting order {order!r}")
            pts = np.concatenate([c.points() for c, _ in circles])
            wts = np.concatenate([c.weights() for c, _ in circles])
            tags = np.concatenate([np.full(c.nodes, tag) for c, tag in circles])
            out[(level, side)] = LevelNodes(pts, wts, tags)
    return out


def _z_for_tag(level: int, z: Sequence[complex], order: str) -> complex:
    if order == "standard":
        return z[level - 2] if level >= 2 else 0.0
    return z[level - 1] if level <= len(z) else 0.0


# assembly ---------------------------------------------------------------------------

class KernelAssembly:
    """Precomputed Nystrom blocks for det(I - K1 KY) on measured nodes.

    The z-independent parts (points, f values, Cauchy blocks, level-1 kernel)
    are built once; ``det(z)`` applies the Q factors and measure prefactors.
    ``ky_sign`` = -1 flips the sign of the Cauchy blocks of KY (the ray-contour
    orientation used by the limit kernels).
    """

    def __init__(self, nodes: dict, fvals: dict, m: int, level1, order: str = "standard",
                 ky_sign: float = 1.0):
        self.m = m
        self.nodes = nodes
        self.order = order
        self.s1 = [nodes[(i, s1_side(i))] for i in range(1, m + 1)]
        self.s2 = [nodes[(j, s2_side(j))] for j in range(1, m + 1)]
        self.f1 = [fvals[(i, s1_side(i))] for i in range(1, m + 1)]
        self.f2 = [fvals[(j, s2_side(j))] for j in range(1, m + 1)]
        self.off1 = np.concatenate([[0], np.cumsum([len(n.points) for n in self.s1])])
        self.off2 = np.concatenate([[0], np.cumsum([len(n.points) for n in self.s2])])
        self.k1_blocks = {}
        for i, j in k1_pairs(m):
            w = self.s1[i - 1].points[:, None]
            wp = self.s2[j - 1].points[None, :]
            self.k1_blocks[(i, j)] = self.f1[i - 1][:, None] / (w - wp) * self.s2[j - 1].weights
        self.ky_blocks = {}
        for j, i in ky_pairs(m):
            wp = self.s2[j - 1].points[:, None]
            w = self.s1[i - 1].points[None, :]
            if i == 1:
                if isinstance(level1, str) and level1 == "delta":
                    if len(self.s2[0].points) != len(self.s1[0].points):
                        raise InvalidInput("delta kernel needs node-matched level-1 circles")
                    # node-matched reflection: no quadrature weight
                    blk = np.diag(self.f2[0]).astype(complex) * ky_sign
                else:
                    blk = self.f2[0][:, None] * level1 * self.s1[0].weights
            else:
                blk = ky_sign * self.f2[j - 1][:, None] / (wp - w) * self.s1[i - 1].weights
            self.ky_blocks[(j, i)] = blk

    def _mu(self, nodes: LevelNodes, level: int, z) -> np.ndarray:
        zl = _z_for_tag(level, z, self.order)
        fac = np.array([measure_factor(t, zl, self.order) if t else 1.0 for t in (0, 1, 2)])
        return fac[nodes.tags]

    def matrices(self, z: Sequence[complex] = ()) -> tuple[np.ndarray, np.ndarray]:
        m = self.m
        z = list(z)
        if len(z) != m - 1:
            raise InvalidInput(f"need {m - 1} z values")
        if any(abs(x) == 0 or abs(1 - x) == 0 for x in z):
            raise Degenerate("z must avoid 0 and 1")
        n1, n2 = self.off1[-1], self.off2[-1]
        K1 = np.zeros((n1, n2), dtype=complex)
        KY = np.zeros((n2, n1), dtype=complex)
        mu1 = [self._mu(self.s1[i], i + 1, z) for i in range(m)]
        mu2 = [self._mu(self.s2[j], j + 1, z) for j in range(m)]
        for (i, j), blk in self.k1_blocks.items():
            K1[self.off1[i - 1]:self.off1[i], self.off2[j - 1]:self.off2[j]] = (
                blk * (q1(j, z, m) * mu2[j - 1]))
        for (j, i), blk in self.ky_blocks.items():
            q = 1.0 if i == 1 else q2(i, z, m)
            KY[self.off2[j - 1]:self.off2[j], self.off1[i - 1]:self.off1[i]] = (
                blk * (q * mu1[i - 1]))
        return K1, KY

    def det(self, z: Sequence[complex] = ()) -> complex:
        K1, KY = self.matrices(z)
        return complex(np.linalg.det(np.eye(K1.shape[0]) - K1 @ KY))


def _fvals(nodes: dict, obs: ObservationSet, scale) -> dict:
    return {(lvl, side): f_level(lvl, n.points, side, obs, scale)
            for (lvl, side), n in nodes.items()}


def assemble(Y: ParticleConfig, obs: ObservationSet, plan: ContourPlan | None = None, *,
             order: str = "standard", kernel: Callable | None = None,
             scale: Sequence[complex] | str | None = "saddle", flat: bool = False) -> KernelAssembly:
    """Build the Nystrom assembly for D_Y.

    ``kernel`` replaces K^ess_Y by a callable (vs, us) -> matrix; ``flat``
    selects the delta-kernel form, valid when max(a+k) <= 0.
    """
    obs.check(Y)
    m = obs.m
    plan = plan or ContourPlan.default(m, reflect=flat)
    if scale == "saddle":
        scale = saddle_scale(obs)
    nodes = plan_nodes(plan, m, order)
    fv = _fvals(nodes, obs, scale)
    if flat:
        if order != "standard":
            raise InvalidInput("delta kernel uses the standard nesting order")
        u, v = nodes[(1, "L")].points, nodes[(1, "R")].points
        if len(u) != len(v) or np.max(np.abs(u + 1 + v)) > 1e-12:
            raise InvalidInput("level-1 left nodes must be the reflections -1-v of the right nodes")
        level1 = "delta"
    else:
        vs, us = nodes[(1, "R")].points, nodes[(1, "L")].points
        level1 = kernel(vs, us) if kernel is not None else kess_matrix(Y, vs, us)
    return KernelAssembly(nodes, fv, m, level1, order)


def dy_fredholm(Y: ParticleConfig, obs: ObservationSet, z: Sequence[complex] = (),
                plan: ContourPlan | None = None, **kw) -> complex:
    """D_Y(z) = det(I - K1 KY) by Nystrom discretization."""
    return assemble(Y, obs, plan, **kw).det(z)


# series route --------------------------------------------------------------------------

def _delta(W: list) -> np.ndarray | complex:
    out = 1.0
    for i in range(len(W)):
        for j in range(i + 1, len(W)):
            out = out * (W[j] - W[i])
    return out


def _cross(W: list, Wp: list):
    out = 1.0
    for a in W:
        for b in Wp:
            out = out * (a - b)
    return out


def _det_small(M: list[list]):
    n = len(M)
    if n == 0:
        return 1.0
    total = 0.0
    for perm in itertools.permutations(range(n)):
        sign = 1
        for x in range(n):
            for y in range(x + 1, n):
                if perm[x] > perm[y]:
                    sign = -sign
        term = sign
        for r, c in enumerate(perm):
            term = term * M[r][c]
        total = total + term
    return total


def series_term(Y: ParticleConfig, obs: ObservationSet, z: Sequence[complex], n: Sequence[int],
                plan: ContourPlan, kernel: Callable | None = None,
                scale: Sequence[complex] | None = None, chunk: int = 2**20) -> complex:
    """D_{n,Y}(z) by tensor-product quadrature over all 2*sum(n) variables."""
    m = obs.m
    n = list(n)
    if sum(n) == 0:
        return 1.0 + 0j
    nodes = plan_nodes(plan, m, "standard")
    fv = _fvals(nodes, obs, scale)
    z = list(z)
    variables = []  # (level, side) per variable
    for lvl in range(1, m + 1):
        variables += [(lvl, "L")] * n[lvl - 1]
    for lvl in range(1, m + 1):
        variables += [(lvl, "R")] * n[lvl - 1]
    pts, wts, fls = [], [], []
    for lvl, side in variables:
        nd = nodes[(lvl, side)]
        zl = _z_for_tag(lvl, z, "standard")
        fac = np.array([1.0, measure_factor(1, zl, "standard") if lvl > 1 else 1.0,
                        measure_factor(2, zl, "standard") if lvl > 1 else 1.0])
        pts.append(nd.points)
        wts.append(nd.weights * fac[nd.tags])
        fls.append(fv[(lvl, side)])
    d = len(variables)
    const = 1.0 + 0j
    for lvl in range(1, m):
        const *= (1 - z[lvl - 1]) ** n[lvl - 1] * (1 - 1 / z[lvl - 1]) ** n[lvl]
    const *= (-1) ** (n[0] * (n[0] + 1) // 2)
    kfun = kernel if kernel is not None else (lambda v, u: kess_matrix(Y, v, u))
    # the first variable is looped over; the rest are broadcast
    shapes = [len(p) for p in pts]
    total = 0.0 + 0j
    for i0 in range(shapes[0]):
        grids = [pts[0][i0:i0 + 1]] + [p for p in pts[1:]]
        axes = []
        for k, g in enumerate(grids):
            shape = [1] * d
            shape[k] = len(g)
            axes.append(k)
            grids[k] = g.reshape(shape)
        wgrid = [wts[0][i0:i0 + 1]] + wts[1:]
        fgrid = [fls[0][i0:i0 + 1]] + fls[1:]
        val = _series_integrand(grids, wgrid, fgrid, variables, n, m, kfun, d)
        total += complex(np.sum(val))
    return const * total


def _series_integrand(grids, wgrid, fgrid, variables, n, m, kfun, d):
    def shaped(arr, k):
        shape = [1] * d
        shape[k] = arr.size
        return arr.reshape(shape)

    U = {lvl: [] for lvl in range(1, m + 1)}
    V = {lvl: [] for lvl in range(1, m + 1)}
    weight = 1.0
    for k, (lvl, side) in enumerate(variables):
        (U if side == "L" else V)[lvl].append(grids[k])
        weight = weight * shaped(wgrid[k], k) * shaped(fgrid[k], k)
    val = weight
    u1, v1 = U[1], V[1]
    if u1:
        # level 1 Cauchy prefactor times the squared level-1 weight, with the
        # Vandermonde division cancelled so coinciding tensor nodes give 0, not 0/0
        kmat = [[_kess_broadcast(kfun, vi, uj) for uj in u1] for vi in v1]
        val = val * _delta(u1) * _delta(v1) / _cross(u1, v1) * _det_small(kmat)
    for lvl in range(2, m + 1):
        val = val * (_delta(U[lvl]) * _delta(V[lvl])) ** 2 / _cross(U[lvl], V[lvl]) ** 2
    for lvl in range(1, m):
        val = val * (_cross(U[lvl], V[lvl + 1]) * _cross(V[lvl], U[lvl + 1])
                     / (_cross(U[lvl], U[lvl + 1]) * _cross(V[lvl], V[lvl + 1])))
    return val


def _kess_broadcast(kfun, v, u):
    V, U = np.broadcast_arrays(v, u)
    return np.asarray(kfun(V.ravel(), U.ravel())).reshape(V.shape)


def dy_series(Y: ParticleConfig, obs: ObservationSet, z: Sequence[complex] = (),
              plan: ContourPlan | None = None, n_cap: int | None = None,
              max_dim: int = 8) -> complex:
    """Truncated series sum_n D_{n,Y}/(n!)^2 with n_l <= n_cap (default N)."""
    obs.check(Y)
    m = obs.m
    plan = plan or ContourPlan.default(m, nodes=32)
    cap = Y.N if n_cap is None else n_cap
    if len(z) != m - 1:
        raise InvalidInput(f"need {m - 1} z values, got {len(z)}")
    if 2 * m * cap > max_dim:
        raise Unsupported(f"series dimension {2 * m * cap} exceeds the guard {max_dim}")
    scale = saddle_scale(obs)
    total = 0.0 + 0j
    for n in itertools.product(range(cap + 1), repeat=m):
        term = series_term(Y, obs, z, n, plan, scale=scale, kernel=_pairwise_kess(Y))
        total += term / math.prod(math.factorial(x) for x in n) ** 2
    return total


def _pairwise_kess(Y: ParticleConfig):
    from .symfunc import kess

    return lambda v, u: kess(Y, v, u)


# probabilities ----------------------------------------------------------------------------

def _z_integral(Y, obs, plan, outside, assembly) -> tuple[complex, float]:
    m = obs.m
    radii = [plan.z_outer_radius if (l in outside) else plan.z_radius for l in range(1, m)]
    nz = plan.z_nodes

    def g(*z):
        return assembly.det(z) / math.prod(1 - x for x in z)

    if m == 1:
        return complex(g()), 0.0
    # every other node reproduces the half-resolution rule; their gap is the error bound
    grid = [r * np.exp(2j * math.pi * np.arange(nz) / nz) for r in radii]
    vals = np.empty([nz] * (m - 1), dtype=complex)
    for idx in itertools.product(range(nz), repeat=m - 1):
        vals[idx] = g(*(grid[a][b] for a, b in enumerate(idx)))
    full = complex(np.mean(vals))
    half = complex(np.mean(vals[tuple(slice(None, None, 2) for _ in range(m - 1))]))
    return full, abs(full - half)


def joint_probability(Y: ParticleConfig, obs: ObservationSet, plan: ContourPlan | None = None,
                      outside: Sequence[int] = (), flat: bool = False,
                      kernel: Callable | None = None) -> ProbabilityResult:
    """P(x_{k_l}(t_l) >= a_l for all l) from the z-integral of D_Y.

    With ``outside`` = I, the z_l circles for l in I have radius > 1 and the
    result carries the sign (-1)^{|I|} (mixed-inequality events).
    """
    obs.check(Y)
    m = obs.m
    outside = tuple(sorted(set(outside)))
    if any(not 1 <= s <= m - 1 for s in outside):
        raise InvalidInput("outside set must lie in 1..m-1")
    plan = plan or ContourPlan.default(m, reflect=flat)
    asm = assemble(Y, obs, plan, flat=flat, kernel=kernel)
    raw, err = _z_integral(Y, obs, plan, outside, asm)
    raw *= (-1) ** len(outside)
    meta = {"plan": plan.to_dict(), "outside": list(outside), "flat_delta": flat}
    return _finish(raw, err, "fredholm", meta)


def signed_probability(Y: ParticleConfig, obs: ObservationSet, plan: ContourPlan | None = None,
                       outside: Sequence[int] = ()) -> ProbabilityResult:
    """P(x_{k_l} >= a_l for l not in I, x_{k_l} < a_l for l in I)."""
    return joint_probability(Y, obs, plan, outside=outside)


def reduction_identity_residual(Y: ParticleConfig, obs: ObservationSet, s: int,
                                z_other: Sequence[complex] | None = None,
                                plan: ContourPlan | None = None, inside_only: bool = False,
                                nz: int = 64) -> float:
    """Residual of the single-z_s reduction identity.

    The inside-minus-outside z_s integral of D_Y/(1-z_s) equals D_Y with the
    s-th point removed.  With ``inside_only`` only the |z_s| < 1 integral is
    taken (valid when a_s + k_s < y_N + N; for s = m, z_{m-1} is removed).
    """
    m = obs.m
    if not 1 <= s <= m or (s == m and not inside_only):
        raise InvalidInput("s must lie in 1..m-1 (or m with inside_only)")
    plan = plan or ContourPlan.default(m)
    zs = list(z_other) if z_other is not None else [0.45 * np.exp(0.7j * (l + 1)) for l in range(m - 2)]
    zvar = s if s < m else m - 1
    asm = assemble(Y, obs, plan)

    def integral(radius: float) -> complex:
        pts = radius * np.exp(2j * math.pi * np.arange(nz) / nz)
        acc = []
        for p in pts:
            z = zs[: zvar - 1] + [p] + zs[zvar - 1:]
            acc.append(asm.det(z) / (1 - p))
        return complex(np.mean(acc))

    lhs = integral(plan.z_radius)
    if not inside_only:
        lhs -= integral(plan.z_outer_radius)
    red = obs.drop(s)
    plan_red = ContourPlan.default(m - 1, nodes=plan.nodes) if m > 1 else plan
    rhs = dy_fredholm(Y, red, zs, plan_red)
    return abs(lhs - rhs)


def invariance_suite(Y: ParticleConfig, obs: ObservationSet, plan: ContourPlan | None = None,
                     z: Sequence[complex] | None = None, seed: int = 7) -> dict[str, float]:
    """Residuals of the contour-order, F-scaling, shift and null-kernel invariances."""
    m = obs.m
    plan = plan or ContourPlan.default(m)
    z = list(z) if z is not None else [0.4 * np.exp(0.9j * (l + 1)) for l in range(m - 1)]
    base = dy_fredholm(Y, obs, z, plan)
    rng = np.random.default_rng(seed)
    out = {}
    out["reorder"] = abs(dy_fredholm(Y, obs, z, plan, order="reversed") - base)
    c = list(np.exp(rng.uniform(-1, 1, m) + 1j * rng.uniform(-3, 3, m)))
    out["scaling"] = abs(dy_fredholm(Y, obs, z, plan, scale=c) - base)
    sh = 3
    out["shift"] = abs(dy_fredholm(Y.shifted(sh), obs.shifted(sh), z, plan) - base)
    kmax = max(obs.k)

    def null_kernel(vs, us):
        return kess_matrix(Y, vs, us) + vs[:, None] ** kmax * np.exp(us)[None, :]

    out["null"] = abs(dy_fredholm(Y, obs, z, plan, kernel=null_kernel) - base)
    return out


def flat_probability(obs: ObservationSet, plan: ContourPlan | None = None,
                     n_particles: int | None = None) -> ProbabilityResult:
    """Flat initial data y_i = -2i via the delta-kernel determinant.

    Without ``n_particles`` this is the infinite flat configuration; the
    translation (a, k) -> (a - 2c, k + c) moves the observation into the regime
    max(a + k) <= 0 where the delta form holds.
    """
    worst = max(a + k for a, k in zip(obs.a, obs.k))
    if n_particles is not None:
        if worst > 0:
            raise Unsupported("finite flat data needs max(a+k) <= 0")
        c = 0
    else:
        c = max(worst, 0)
    shifted = ObservationSet(tuple(k + c for k in obs.k), tuple(a - 2 * c for a in obs.a), obs.t)
    n = n_particles if n_particles is not None else max(shifted.k)
    Y = ParticleConfig.flat(n)
    if plan is not None and not plan.reflect:
        raise InvalidInput("flat plan needs reflect=True")
    res = joint_probability(Y, shifted, plan, flat=True)
    res.provenance = "fredholm-flat"
    res.meta["translation"] = c
    return res


def height_to_particle(n: int, a: int) -> tuple[int, int]:
    """H(n, T) >= a  iff  x_{(a-n)/2}(T) >= n; returns (k, threshold)."""
    if (a - n) % 2:
        raise InvalidInput(f"height {a} and site {n} must have equal parity")
    return (a - n) // 2, n
