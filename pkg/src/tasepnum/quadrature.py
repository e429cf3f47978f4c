"""Contour quadrature: trapezoid rule on circles, Gauss-Legendre on rays,
the signed nested-contour measure and tensor z-integrals."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, InvalidInput, NumericalDomain

TWO_PI_I = 2j * math.pi
NODE_CAP = 2**14


def psum(values: np.ndarray) -> complex:
    """Pairwise (tree) summation of a 1-d array.

    numpy's add.reduce is already pairwise on contiguous data, so serial and
    chunked totals agree to a few ulps.
    """
    return complex(np.add.reduce(np.ascontiguousarray(values).ravel()))


def _evaluate(f: Callable, pts: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(pts), dtype=complex)
        if vals.shape != pts.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([complex(f(p)) for p in pts])
    if not np.all(np.isfinite(vals)):
        raise NumericalDomain("integrand is not finite at a quadrature node")
    return vals


@dataclass(frozen=True)
class CircleContour:
    center: complex
    radius: float
    nodes: int = 64
    ccw: bool = True
    phase: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInput(f"radius must be positive, got {self.radius}")
        n = self.nodes
        if n < 8 or n & (n - 1):
            raise InvalidInput(f"node count must be a power of two >= 8, got {n}")

    def points(self) -> np.ndarray:
        theta = self.phase + 2 * math.pi * np.arange(self.nodes) / self.nodes
        return self.center + self.radius * np.exp(1j * theta)

    def weights(self) -> np.ndarray:
        """Weights for dw/(2 pi i): (w - c)/n, negated for clockwise."""
        w = (self.points() - self.center) / self.nodes
        return w if self.ccw else -w

    def with_nodes(self, nodes: int) -> "CircleContour":
        return replace(self, nodes=nodes)


def integrate_circle(f: Callable, c: CircleContour) -> complex:
    """(1/2 pi i) * contour integral of f over c, by the trapezoid rule."""
    return psum(_evaluate(f, c.points()) * c.weights())


def adaptive_integrate(f: Callable, c: CircleContour, tol: float,
                       cap: int = NODE_CAP) -> tuple[complex, float]:
    """Double the node count until successive values differ by less than tol."""
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    prev = integrate_circle(f, c)
    n = c.nodes
    diff = math.inf
    while n < cap:
        n *= 2
        cur = integrate_circle(f, c.with_nodes(n))
        diff = abs(cur - prev)
        prev = cur
        if diff < tol:
            return cur, diff
    raise ConvergenceError(f"no convergence within {cap} nodes", best=prev, error=diff)


def z_polydisc_integrate(g: Callable[..., complex], radii: Sequence[float],
                         nodes: int = 64) -> complex:
    """Tensor trapezoid value of the integral of g(z_1..z_k) prod dz/(2 pi i z)."""
    radii = list(radii)
    if not radii:
        return complex(g())
    grid = [r * np.exp(2j * math.pi * np.arange(nodes) / nodes) for r in radii]
    vals = np.empty(nodes ** len(radii), dtype=complex)
    for idx, zs in enumerate(itertools.product(*grid)):
        vals[idx] = g(*zs)
    if not np.all(np.isfinite(vals)):
        raise NumericalDomain("z-integrand is not finite")
    return psum(vals) / nodes ** len(radii)


# nested systems -------------------------------------------------------------

def family_index(m: int, level: int, kind: str) -> int:
    """Position of a circle in the out->in ordered family of 2m-1 circles."""
    if level == 1:
        return m - 1
    if kind == "out":
        return m - level
    if kind == "in":
        return m + level - 2
    raise InvalidInput(f"level {level} needs kind 'out' or 'in'")


def geometric_radii(count: int, rmin: float = 0.08, rmax: float = 0.42) -> tuple[float, ...]:
    if count == 1:
        return (math.sqrt(rmin * rmax),)
    return tuple(float(r) for r in np.geomspace(rmax, rmin, count))


@dataclass(frozen=True)
class NestedCircleSystem:
    """Two families of 2m-1 circles, about -1 (left) and 0 (right), out->in."""

    m: int
    left: tuple[CircleContour, ...]
    right: tuple[CircleContour, ...]

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        k = 2 * self.m - 1
        if len(self.left) != k or len(self.right) != k:
            raise InvalidInput(f"need {k} circles per family")
        for fam, centre in ((self.left, -1.0), (self.right, 0.0)):
            radii = [c.radius for c in fam]
            if any(abs(c.center - centre) > 1e-15 for c in fam):
                raise InvalidInput("circle centred away from its singular point")
            if any(b >= a for a, b in zip(radii, radii[1:])):
                raise InvalidInput("radii must strictly decrease from out to in")
            if radii[0] >= 1.0:
                raise InvalidInput("circle encloses the other family's singular point")
        if self.left[0].radius + self.right[0].radius >= 1.0:
            raise InvalidInput("left and right families intersect")

    def circle(self, side: str, level: int, kind: str = "mid") -> CircleContour:
        fam = self.left if side == "L" else self.right
        return fam[family_index(self.m, level, kind)]


@dataclass(frozen=True)
class ContourPlan:
    """Radii (out->in) and node counts for the nested circles and z-circles."""

    left_radii: tuple[float, ...]
    right_radii: tuple[float, ...]
    nodes: int = 64
    z_radius: float = 0.5
    z_outer_radius: float = 2.0
    z_nodes: int = 64
    reflect: bool = False

    @property
    def m(self) -> int:
        return (len(self.right_radii) + 1) // 2

    @classmethod
    def default(cls, m: int, nodes: int = 64, rmin: float = 0.08, rmax: float = 0.42,
                **kw) -> "ContourPlan":
        radii = geometric_radii(2 * m - 1, rmin, rmax)
        return cls(radii, radii, nodes=nodes, **kw)

    def system(self) -> NestedCircleSystem:
        right = tuple(CircleContour(0.0, r, self.nodes) for r in self.right_radii)
        # reflect: the level-1 left circle is -1 - (level-1 right circle), node for node
        left = []
        for i, r in enumerate(self.left_radii):
            phase = math.pi if (self.reflect and i == self.m - 1) else 0.0
            left.append(CircleContour(-1.0, r, self.nodes, phase=phase))
        return NestedCircleSystem(self.m, tuple(left), right)

    def to_dict(self) -> dict:
        return {"left_radii": list(self.left_radii), "right_radii": list(self.right_radii),
                "nodes": self.nodes, "z_radius": self.z_radius,
                "z_outer_radius": self.z_outer_radius, "z_nodes": self.z_nodes,
                "reflect": self.reflect}


# rays ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RaySegmentContour:
    """Two rays vertex + s*exp(+-i*angle), 0 <= s <= s_max, run from the lower
    ray's far end to the upper ray's far end."""

    vertex: complex
    angle: float
    s_max: float
    panels: int = 8
    order: int = 16
    grading: float = field(default=1.0)

    def _param(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.order)
        # panel breakpoints, optionally graded towards the vertex
        edges = self.s_max * np.linspace(0.0, 1.0, self.panels + 1) ** self.grading
        s, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            s.append(0.5 * (b - a) * x + 0.5 * (b + a))
            ws.append(0.5 * (b - a) * w)
        return np.concatenate(s), np.concatenate(ws)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Points and weights for d(zeta)/(2 pi i)."""
        s, ws = self._param()
        up = np.exp(1j * self.angle)
        dn = np.exp(-1j * self.angle)
        # lower ray traversed inward: zeta = vertex + s*dn with s decreasing
        pts = np.concatenate([self.vertex + s[::-1] * dn, self.vertex + s * up])
        wts = np.concatenate([-dn * ws[::-1], up * ws]) / TWO_PI_I
        return pts, wts


def ray_cutoff(majorant: Callable, tol: float = 1e-16, s_hi: float = 200.0,
               vectorized: bool = False) -> float:
    """Smallest s on a fine grid beyond which the decay majorant stays below tol."""
    grid = np.linspace(0.5, s_hi, 4000)
    if vectorized:
        vals = np.asarray(majorant(grid), dtype=float)
    else:
        vals = np.array([majorant(s) for s in grid])
    above = np.nonzero(~(vals < tol))[0]
    if len(above) == 0:
        return float(grid[0])
    if above[-1] == len(grid) - 1:
        raise ConvergenceError("ray majorant does not decay below tolerance")
    return float(grid[above[-1] + 1])
