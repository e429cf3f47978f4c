"""Limiting multi-point distributions F_step and F_flat.

The kernels live on ray contours: the left family runs from infinity at angle
-2pi/3 to infinity at 2pi/3 in Re < 0, the right family from angle -pi/3 to
pi/3 (pi/5 when two times coincide) in Re > 0.  Each family is nested
out_m, ..., out_2, level 1, in_2, ..., in_m moving away from the imaginary
axis.  The determinants reuse the finite-time Nystrom assembly with the
Cauchy blocks of the second kernel negated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, InvalidInput, Unsupported
from .multipoint import (KernelAssembly, LevelNodes, ObservationSet, ProbabilityResult,
                         _finish, flat_probability, joint_probability)
from .quadrature import ContourPlan, RaySegmentContour, family_index, ray_cutoff
from .symfunc import ParticleConfig

LEFT_ANGLE = 2 * math.pi / 3
RIGHT_ANGLE = math.pi / 3
RIGHT_ANGLE_EQUAL = math.pi / 5
DECAY_TOL = 1e-16
N_CAP = 40
WIDE_MAX_S = 12.0  # auto mode drops to pi/5 when pi/3 rays need a longer cutoff


@dataclass(frozen=True)
class LimitObservation:
    """Scaled points (x_l, tau_l, h_l), l = 1..m."""

    x: tuple[float, ...]
    tau: tuple[float, ...]
    h: tuple[float, ...]

    def __post_init__(self):
        for name in ("x", "tau", "h"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        m = len(self.x)
        if m < 1 or len(self.tau) != m or len(self.h) != m:
            raise InvalidInput("x, tau and h must have the same positive length")
        if not all(np.isfinite(self.x + self.tau + self.h)):
            raise InvalidInput("limit parameters must be finite")
        if any(t <= 0 for t in self.tau):
            raise InvalidInput("scaled times must be positive")
        for i in range(m - 1):
            if self.tau[i + 1] < self.tau[i]:
                raise InvalidInput("scaled times must be nondecreasing")
            if self.tau[i + 1] == self.tau[i] and not self.x[i] < self.x[i + 1]:
                raise InvalidInput("equal times need strictly increasing x")

    @classmethod
    def of(cls, triples: Sequence[tuple[float, float, float]]) -> "LimitObservation":
        x, tau, h = zip(*triples)
        return cls(x, tau, h)

    @property
    def m(self) -> int:
        return len(self.x)

    @property
    def equal_times(self) -> bool:
        return any(a == b for a, b in zip(self.tau, self.tau[1:]))

    def triples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.x, self.tau, self.h))

    def with_h(self, h: Sequence[float]) -> "LimitObservation":
        return LimitObservation(self.x, self.tau, tuple(h))


# f_i ------------------------------------------------------------------------------

def _log_F(i: int, zeta, obs: LimitObservation):
    if i == 0:
        return np.zeros_like(np.asarray(zeta, dtype=complex))
    x, tau, h = obs.x[i - 1], obs.tau[i - 1], obs.h[i - 1]
    return -tau * zeta ** 3 / 3 + x * zeta ** 2 + h * zeta


def limit_f(level: int, zeta, side: str, obs: LimitObservation):
    """F_l/F_{l-1} on the left (Re < 0), F_{l-1}/F_l on the right."""
    if not 1 <= level <= obs.m:
        raise InvalidInput("level out of range")
    zeta = np.asarray(zeta, dtype=complex)
    diff = _log_F(level, zeta, obs) - _log_F(level - 1, zeta, obs)
    if side == "L":
        out = np.exp(diff)
    elif side == "R":
        out = np.exp(-diff)
    else:
        raise InvalidInput(f"side must be 'L' or 'R', got {side!r}")
    return complex(out) if out.ndim == 0 else out


# contours --------------------------------------------------------------------------

@dataclass(frozen=True)
class RayContourPlan:
    """Nested ray families.

    ``offsets`` are the 2m-1 distances of the vertices from the imaginary axis,
    out -> in (increasing).  ``s_max`` of None means the cutoff is chosen from
    the decay majorant of the f's for each observation set.
    """

    offsets: tuple[float, ...]
    panels: int = 8
    order: int = 16
    grading: float = 1.5
    s_max: float | None = None
    s_scale: float = 1.0
    angle_mode: str = "auto"
    panel_length: float = 1.0

    def __post_init__(self):
        off = tuple(float(o) for o in self.offsets)
        object.__setattr__(self, "offsets", off)
        if len(off) % 2 != 1 or any(o <= 0 for o in off):
            raise InvalidInput("need an odd number of positive offsets")
        if any(b <= a for a, b in zip(off, off[1:])):
            raise InvalidInput("offsets must increase from out to in")
        if self.panels < 1 or self.order < 2:
            raise InvalidInput("bad panel layout")
        if self.angle_mode not in ("auto", "wide", "narrow"):
            raise InvalidInput("angle_mode must be 'auto', 'wide' or 'narrow'")

    @property
    def m(self) -> int:
        return (len(self.offsets) + 1) // 2

    @classmethod
    def default(cls, m: int, panels: int = 8, order: int = 16, first: float = 0.3,
                spacing: float = 0.25, **kw) -> "RayContourPlan":
        return cls(tuple(first + spacing * k for k in range(2 * m - 1)), panels, order, **kw)

    def refined(self, factor: int = 2) -> "RayContourPlan":
        return replace(self, panels=self.panels * factor,
                       panel_length=self.panel_length / factor)

    def to_dict(self) -> dict:
        return {"offsets": list(self.offsets), "panels": self.panels, "order": self.order,
                "grading": self.grading, "s_max": self.s_max, "s_scale": self.s_scale,
                "angle_mode": self.angle_mode, "panel_length": self.panel_length}

    def right_angle(self, obs: LimitObservation) -> float:
        """pi/3, or pi/5 with equal times.  In auto mode nearly equal times whose
        pi/3 rays fail to decay within the cutoff window also get pi/5; both give
        the same determinant when the times differ."""
        if self.angle_mode == "narrow" or obs.equal_times:
            return RIGHT_ANGLE_EQUAL
        if self.angle_mode == "wide":
            return RIGHT_ANGLE
        try:
            wide = self._cutoff_at(obs, RIGHT_ANGLE)
        except ConvergenceError:
            return RIGHT_ANGLE_EQUAL
        return RIGHT_ANGLE if wide <= WIDE_MAX_S else RIGHT_ANGLE_EQUAL

    def cutoff(self, obs: LimitObservation) -> float:
        """Truncation S_max: beyond it every |f_l| is below DECAY_TOL on every ray."""
        if self.s_max is not None:
            return float(self.s_max) * self.s_scale
        return self._cutoff_at(obs, self.right_angle(obs)) * self.s_scale

    def _cutoff_at(self, obs: LimitObservation, angle: float) -> float:
        rays = self._rays(obs, angle)

        def majorant(s: np.ndarray) -> np.ndarray:
            best = np.zeros_like(s)
            for (level, side), rs in rays.items():
                for vertex, angle in rs:
                    for sign in (1, -1):
                        vals = np.abs(limit_f(level, vertex + s * np.exp(sign * 1j * angle),
                                              side, obs))
                        best = np.maximum(best, np.where(np.isnan(vals), np.inf, vals))
            return best

        with np.errstate(over="ignore", invalid="ignore"):
            return ray_cutoff(majorant, DECAY_TOL, vectorized=True)

    def rays(self, obs: LimitObservation) -> dict:
        """(vertex, angle) of the rays carrying each (level, side)."""
        return self._rays(obs, self.right_angle(obs))

    def _rays(self, obs: LimitObservation, ra: float) -> dict:
        m = obs.m
        if m != self.m:
            raise InvalidInput(f"plan has {self.m} levels, observations have {m}")
        out = {}
        for level in range(1, m + 1):
            kinds = ["mid"] if level == 1 else ["out", "in"]
            idx = [family_index(m, level, k) for k in kinds]
            out[(level, "L")] = [(-self.offsets[i], LEFT_ANGLE) for i in idx]
            out[(level, "R")] = [(self.offsets[i], ra) for i in idx]
        return out

    def nodes(self, obs: LimitObservation, flat: bool = False) -> dict:
        """LevelNodes per (level, side); with ``flat`` the level-1 left nodes are
        the negated level-1 right nodes."""
        angle = self.right_angle(obs)
        if flat and angle != RIGHT_ANGLE:
            raise Unsupported("flat determinant needs pi/3 right rays (strictly increasing, "
                              "well separated times)")
        s_max = self.cutoff(obs)
        panels = max(self.panels, math.ceil(s_max / self.panel_length))
        out = {}
        for key, rays in self._rays(obs, angle).items():
            pts, wts, tags = [], [], []
            for n, (vertex, angle) in enumerate(rays):
                p, w = RaySegmentContour(vertex, angle, s_max, panels, self.order,
                                         self.grading).nodes()
                pts.append(p)
                wts.append(w)
                tags.append(np.full(len(p), 0 if len(rays) == 1 else n + 1))
            out[key] = LevelNodes(np.concatenate(pts), np.concatenate(wts),
                                  np.concatenate(tags))
        if flat:
            right = out[(1, "R")]
            # the left family at +-2pi/3 through -c is the mirror of the right one
            out[(1, "L")] = LevelNodes(-right.points, -right.weights, right.tags)
        return out


# determinants ------------------------------------------------------------------------

def limit_assembly(kind: str, obs: LimitObservation,
                   plan: RayContourPlan | None = None) -> KernelAssembly:
    if kind not in ("step", "flat"):
        raise InvalidInput(f"kind must be 'step' or 'flat', got {kind!r}")
    plan = plan or RayContourPlan.default(obs.m)
    flat = kind == "flat"
    nodes = plan.nodes(obs, flat=flat)
    fvals = {(l, s): limit_f(l, nd.points, s, obs) for (l, s), nd in nodes.items()}
    if flat:
        level1 = "delta"
    else:
        v = nodes[(1, "R")].points[:, None]
        u = nodes[(1, "L")].points[None, :]
        level1 = 1.0 / (u - v)
    return KernelAssembly(nodes, fvals, obs.m, level1, ky_sign=-1.0)


def check_reflection(nodes: dict, tol: float = 1e-12) -> None:
    """C_{1,L} = -C_{1,R} node for node, as the delta kernel requires."""
    left, right = nodes[(1, "L")].points, nodes[(1, "R")].points
    if len(left) != len(right) or np.max(np.abs(left + right)) > tol:
        raise InvalidInput("flat kernel needs level-1 left nodes mirroring the right nodes")


def d_step(z: Sequence[complex], obs: LimitObservation,
           plan: RayContourPlan | None = None) -> complex:
    """det(I - K1 K_step) at z = (z_1..z_{m-1})."""
    return limit_assembly("step", obs, plan).det(z)


def d_flat(z: Sequence[complex], obs: LimitObservation,
           plan: RayContourPlan | None = None, nodes: dict | None = None) -> complex:
    """det(I - K1 K_flat) at z; the delta row is a node-matched reflection."""
    if nodes is not None:
        check_reflection(nodes)
        fvals = {(l, s): limit_f(l, nd.points, s, obs) for (l, s), nd in nodes.items()}
        return KernelAssembly(nodes, fvals, obs.m, "delta", ky_sign=-1.0).det(z)
    asm = limit_assembly("flat", obs, plan)
    check_reflection(asm.nodes)
    return asm.det(z)


def f_limit(kind: str, obs: LimitObservation, plan: RayContourPlan | None = None,
            z_radius: float = 0.5, z_nodes: int = 32) -> ProbabilityResult:
    """F_step or F_flat: the z-integral of prod (1 - z_l)^{-1} D_kind."""
    if not 0 < z_radius < 1:
        raise InvalidInput("z circles must have radius in (0, 1)")
    plan = plan or RayContourPlan.default(obs.m)
    asm = limit_assembly(kind, obs, plan)
    m = obs.m
    meta = {"plan": plan.to_dict(), "s_max": plan.cutoff(obs), "kind": kind,
            "z_radius": z_radius, "z_nodes": z_nodes}
    if m == 1:
        return _finish(asm.det(()), 0.0, f"limit-{kind}", meta)
    grid = z_radius * np.exp(2j * math.pi * np.arange(z_nodes) / z_nodes)
    vals = np.empty([z_nodes] * (m - 1), dtype=complex)
    for idx in itertools.product(range(z_nodes), repeat=m - 1):
        z = [grid[b] for b in idx]
        vals[idx] = asm.det(z) / math.prod(1 - x for x in z)
    full = complex(np.mean(vals))
    half = complex(np.mean(vals[tuple(slice(None, None, 2) for _ in range(m - 1))]))
    return _finish(full, abs(full - half), f"limit-{kind}", meta)


# scaling and convergence ---------------------------------------------------------------

def scaling_map(T: float, obs: LimitObservation) -> tuple[ObservationSet, int]:
    """Lattice observation (k, a, t) and particle count for the scaled point.

    a = round(2 x T^{2/3}), k = round(tau T/2 - x T^{2/3} - h T^{1/3}/2),
    t = 2 tau T and N = max k.
    """
    if T < 4:
        raise InvalidInput("scaling map needs T >= 4")
    a = tuple(int(round(2 * x * T ** (2 / 3))) for x in obs.x)
    k = tuple(int(round(tau * T / 2 - x * T ** (2 / 3) - h * T ** (1 / 3) / 2))
              for x, tau, h in obs.triples())
    if min(k) < 1:
        raise Unsupported(f"scaled labels {k} fall below 1")
    N = max(k)
    if N > N_CAP:
        raise Unsupported(f"N = {N} exceeds the cap {N_CAP}")
    t = tuple(2 * tau * T for tau in obs.tau)
    return ObservationSet(k, a, t), N


def probe_plan(m: int, nodes: int = 128) -> ContourPlan:
    """Circles crowding the saddle -1/2, where the finite-time f's concentrate."""
    return ContourPlan.default(m, nodes=nodes, rmin=0.3, rmax=0.45, reflect=True)


def finite_time_value(kind: str, T: float, obs: LimitObservation,
                      plan: ContourPlan | None = None) -> float:
    lattice, N = scaling_map(T, obs)
    plan = plan or probe_plan(obs.m)
    if kind == "step":
        return joint_probability(ParticleConfig.step(N), lattice, plan).value
    if kind == "flat":
        res = flat_probability(lattice, plan)
        if max(res.meta.get("translation", 0) + k for k in lattice.k) > N_CAP:
            raise Unsupported("translated flat observation exceeds the particle cap")
        return res.value
    raise InvalidInput(f"kind must be 'step' or 'flat', got {kind!r}")


@dataclass
class ConvergenceTable:
    kind: str
    limit: float
    T: list[float] = field(default_factory=list)
    finite: list[float] = field(default_factory=list)

    @property
    def gaps(self) -> list[float]:
        return [abs(v - self.limit) for v in self.finite]

    @property
    def decreasing(self) -> bool:
        g = self.gaps
        return all(b < a for a, b in zip(g, g[1:]))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "limit": self.limit, "T": self.T, "finite": self.finite,
                "gaps": self.gaps, "decreasing": self.decreasing}


def convergence_probe(kind: str, obs: LimitObservation, Ts: Sequence[float] = (8, 16, 32),
                      plan: RayContourPlan | None = None) -> ConvergenceTable:
    """Finite-time probabilities along a T ladder against the limit value."""
    table = ConvergenceTable(kind, f_limit(kind, obs, plan).value)
    for T in Ts:
        table.T.append(float(T))
        table.finite.append(finite_time_value(kind, T, obs))
    return table
