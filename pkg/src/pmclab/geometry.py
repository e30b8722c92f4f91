"""Radial graphs in the unit cylinder and their discrete A^c energies.

The cylinder is ``U = B_1 x (-1, 1)``.  A sheet is the graph of a radial
function ``u(r)`` sampled at ``r_i = i/n``.  The lower sheet bounds the
region ``{-1 < z < u}``, the upper sheet the region ``{v < z < 1}``.

Discretization
--------------
Area uses forward differences on cells with the weight ``2 pi r_{i+1/2} h``.
Volume uses nodal values times the area of the dual annulus around each node
(``pi (h/2)^2`` at the center, ``2 pi r_i h`` inside, ``pi (1 - r_{n-1/2}^2)``
on the rim), so the weights sum to ``pi`` exactly.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OrderingViolation, RadiusTooSmall

__all__ = [
    "Mode",
    "RadialProfile",
    "StackProblem",
    "EnergyBreakdown",
    "CapParams",
    "Grid2DPair",
    "radii",
    "volume_weights",
    "graph_area",
    "region_volume",
    "ah_energy",
    "cap_params",
    "cap_profile",
    "touching_eps",
    "calibration_residual",
    "pmc_residual",
    "steiner_symmetrize",
    "grid_area",
    "column_length",
]


class Mode(enum.Enum):
    SINGLE = "single"
    STACK = "stack"
    MEMBRANE = "membrane"


def radii(n: int) -> np.ndarray:
    return np.arange(n + 1, dtype=float) / n


def _midpoints(n: int) -> np.ndarray:
    return (np.arange(n, dtype=float) + 0.5) / n


def volume_weights(n: int) -> np.ndarray:
    """Dual-annulus areas around each node; they sum to pi."""
    mid = _midpoints(n)
    outer = np.append(mid, 1.0)
    inner = np.concatenate(([0.0], mid))
    return np.pi * (outer**2 - inner**2)


@dataclass(frozen=True)
class RadialProfile:
    """Heights ``u(r_i)`` on the uniform grid ``r_i = i/n``."""

    values: np.ndarray
    boundary_value: float | None = None
    n: int = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("profile needs at least two nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        if np.any(np.abs(values) > 1.0):
            raise ValueError("profile leaves the cylinder (|u| > 1)")
        bv = values[-1] if self.boundary_value is None else float(self.boundary_value)
        if values[-1] != bv:
            raise ValueError("values[n] must equal boundary_value")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "boundary_value", float(bv))
        object.__setattr__(self, "n", values.size - 1)

    @classmethod
    def constant(cls, value: float, n: int) -> RadialProfile:
        return cls(np.full(n + 1, float(value)))

    @property
    def r(self) -> np.ndarray:
        return radii(self.n)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def slopes(self) -> np.ndarray:
        """Forward differences, one per cell."""
        return np.diff(self.values) * self.n

    def reflected(self) -> RadialProfile:
        return RadialProfile(-self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("r,u\n")
        for r, u in zip(self.r, self.values):
            buf.write(f"{float(r)!r},{float(u)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> RadialProfile:
        lines = text.strip("\n").split("\n")
        if lines[0].strip() != "r,u":
            raise ValueError("expected header 'r,u'")
        rows = [line.split(",") for line in lines[1:]]
        r = np.array([float(a) for a, _ in rows])
        u = np.array([float(b) for _, b in rows])
        n = r.size - 1
        if not np.allclose(r, radii(n), rtol=0, atol=1e-15):
            raise ValueError("radii are not the uniform grid i/n")
        return cls(u)


@dataclass(frozen=True)
class StackProblem:
    """One instance of the stacked-disk minimization in the unit cylinder."""

    c: float
    eps: float
    n: int
    mode: Mode = Mode.STACK

    def __post_init__(self):
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be finite and >= 0, got {self.c}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class EnergyBreakdown:
    area: float
    volume: float
    total: float

    @classmethod
    def from_terms(cls, area: float, volume: float, c: float) -> EnergyBreakdown:
        return cls(area=area, volume=volume, total=area - c * volume)


@dataclass(frozen=True)
class CapParams:
    radius: float
    apex_height: float
    touching_eps: float


@dataclass(frozen=True)
class Grid2DPair:
    """Two ordered graphs over the square [-1, 1]^2 on an m x m grid."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1]:
            raise ValueError("lower must be a square m x m array")
        if upper.shape != lower.shape:
            raise ValueError("lower and upper must have the same shape")
        if np.any(lower > upper):
            raise OrderingViolation("lower sheet above upper sheet")
        if np.any(np.abs(lower) > 1.0) or np.any(np.abs(upper) > 1.0):
            raise ValueError("grid pair leaves the cylinder")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def m(self) -> int:
        return self.lower.shape[0]


def graph_area(profile: RadialProfile) -> float:
    n = profile.n
    p = profile.slopes()
    return float(np.sum(2.0 * np.pi * _midpoints(n) * np.sqrt(1.0 + p * p)) / n)


def region_volume(profile: RadialProfile) -> float:
    """Volume between ``z = -1`` and the graph."""
    return float(np.dot(volume_weights(profile.n), profile.values + 1.0))


def _volume_above(profile: RadialProfile) -> float:
    return float(np.dot(volume_weights(profile.n), 1.0 - profile.values))


def ah_energy(problem: StackProblem, lower: RadialProfile,
              upper: RadialProfile | None = None) -> EnergyBreakdown:
    """Area minus ``c`` times enclosed volume for the configuration."""
    if problem.mode is Mode.SINGLE:
        if upper is not None:
            raise ValueError("single-sheet mode takes no upper sheet")
        return EnergyBreakdown.from_terms(graph_area(lower), region_volume(lower), problem.c)

    if problem.mode is Mode.STACK:
        if upper is not None and not np.array_equal(upper.values, -lower.values):
            raise ValueError("symmetric stack requires upper == -lower")
        upper = lower.reflected()
    elif upper is None:
        raise ValueError("two-membrane mode needs an upper sheet")
    if upper.n != lower.n:
        raise ValueError("sheets live on different grids")
    bad = np.flatnonzero(lower.values > upper.values)
    if bad.size:
        raise OrderingViolation(f"lower > upper at node {bad[0]}")
    area = graph_area(lower) + graph_area(upper)
    volume = region_volume(lower) + _volume_above(upper)
    return EnergyBreakdown.from_terms(area, volume, problem.c)


def _radius(c: float) -> float:
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if c > 2:
        raise RadiusTooSmall(f"cap radius 2/c = {2 / c:.6g} < 1")
    return 2.0 / c


def touching_eps(c: float) -> float:
    """Separation at which the two caps first touch at the axis."""
    R = _radius(c)
    # R - sqrt(R^2 - 1) without cancellation for small c
    return 1.0 / (R + math.sqrt(R * R - 1.0))


def cap_params(c: float, eps: float) -> CapParams:
    R = _radius(c)
    t = touching_eps(c)
    return CapParams(radius=R, apex_height=t - eps, touching_eps=t)


def cap_profile(c: float, eps: float, n: int) -> RadialProfile:
    """Sampled spherical cap of radius 2/c through the rim at height -eps."""
    R = _radius(c)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    r = radii(n)
    # sqrt(R^2 - r^2) - sqrt(R^2 - 1), rewritten to stay accurate as R -> inf
    lift = (1.0 - r * r) / (np.sqrt(R * R - r * r) + math.sqrt(R * R - 1.0))
    u = lift - eps
    u[-1] = -eps
    return RadialProfile(u)


def pmc_residual(profile: RadialProfile, c: float) -> np.ndarray:
    """``(1/r)(r u'/sqrt(1+u'^2))' + c`` at interior nodes 1..n-1."""
    n = profile.n
    p = profile.slopes()
    flux = _midpoints(n) * p / np.sqrt(1.0 + p * p)
    r = radii(n)[1:-1]
    return np.diff(flux) * n / r + c


def calibration_residual(profile: RadialProfile, c: float) -> float:
    """Sup of the PMC residual over nodes 2..n-2."""
    if profile.n < 8:
        raise ValueError("calibration residual needs n >= 8")
    res = pmc_residual(profile, c)
    # res[k] sits at node k+1
    return float(np.max(np.abs(res[1:-1])))


def grid_area(u: np.ndarray) -> float:
    """Discrete area of a graph over [-1, 1]^2, cellwise averaged gradients."""
    m = u.shape[0]
    h = 2.0 / (m - 1)
    ux = 0.5 * ((u[1:, :-1] - u[:-1, :-1]) + (u[1:, 1:] - u[:-1, 1:])) / h
    uy = 0.5 * ((u[:-1, 1:] - u[:-1, :-1]) + (u[1:, 1:] - u[1:, :-1])) / h
    return float(np.sum(np.sqrt(1.0 + ux * ux + uy * uy)) * h * h)


def column_length(pair: Grid2DPair) -> np.ndarray:
    """Length of each vertical column occupied by the two regions."""
    return (pair.lower + 1.0) + (1.0 - pair.upper)


def steiner_symmetrize(pair: Grid2DPair) -> Grid2DPair:
    """Rearrange each column into a bottom and a top slab of equal height."""
    half = 0.5 * (pair.lower - pair.upper)
    return Grid2DPair(lower=half, upper=-half)
