"""Diagnostics on solved configurations: free-boundary location, discrete
second/third differences across it, and the second-variation form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DisconnectedContact, NoFreeBoundary
from .geometry import RadialProfile, StackProblem, radii
from .solver import SolveReport

__all__ = [
    "RegularityReport",
    "StabilityResult",
    "regularity_scan",
    "contact_radius",
    "free_boundary_index",
    "stability_form",
    "STABILITY_SUITE",
]

JUMP_OFFSET = 3


@dataclass(frozen=True)
class RegularityReport:
    max_second_diff: float
    second_diff_jump_at_fb: float | None
    max_third_diff: float
    grid_n: int
    fb_index: int | None = None

    @property
    def has_free_boundary(self) -> bool:
        return self.fb_index is not None


@dataclass(frozen=True)
class StabilityResult:
    lhs: float
    rhs: float
    margin: float


def free_boundary_index(report: SolveReport) -> int:
    """Index of the outermost node of the contact disk around the axis."""
    n = report.lower.n
    if not report.contact:
        raise NoFreeBoundary("contact set is empty")
    start, end = report.contact[0]
    if start != 0:
        raise DisconnectedContact(f"contact starts at node {start}, not at the axis")
    if end >= n:
        raise NoFreeBoundary("contact covers the whole grid")
    return end


def contact_radius(report: SolveReport) -> float:
    """Outer radius of the contact disk: last active node plus half a cell."""
    k = free_boundary_index(report)
    return (k + 0.5) / report.lower.n


def _even_extension(u: np.ndarray) -> np.ndarray:
    # u(-r) = u(r); index i of the result is node i - n
    return np.concatenate((u[:0:-1], u))


def regularity_scan(report: SolveReport, problem: StackProblem | None = None,
                    require_free_boundary: bool = False) -> RegularityReport:
    """Second and third differences of the upper sheet.

    The sup of ``|u''|`` skips the two nodes straddling the free boundary.
    The jump is ``u''`` three cells outside the contact disk minus ``u''``
    three cells inside it; for the stack this tends to ``c``.  Third
    differences are taken within three cells of the free boundary, or over
    the whole grid when there is none.
    """
    u = report.upper.values
    n = u.size - 1
    try:
        k = free_boundary_index(report)
    except (NoFreeBoundary, DisconnectedContact):
        if require_free_boundary:
            raise
        k = None

    d2 = (u[:-2] - 2.0 * u[1:-1] + u[2:]) * n**2          # nodes 1..n-1
    d3 = (u[3:] - 3.0 * u[2:-1] + 3.0 * u[1:-2] - u[:-3]) * n**3  # half-nodes 1.5..n-1.5

    keep = np.ones(d2.size, dtype=bool)
    jump = None
    if k is not None:
        for node in (k, k + 1):
            if 1 <= node <= n - 1:
                keep[node - 1] = False
        ext = _even_extension(u)
        d2_ext = (ext[:-2] - 2.0 * ext[1:-1] + ext[2:]) * n**2  # nodes -(n-1)..n-1

        def second(node):
            return d2_ext[node + n - 1]

        inside, outside = k - JUMP_OFFSET, k + 1 + JUMP_OFFSET
        if outside <= n - 1:
            jump = float(second(outside) - second(inside))
        # d3[j] is centred between nodes j+1 and j+2
        lo = max(0, k - JUMP_OFFSET - 1)
        hi = min(d3.size, k + JUMP_OFFSET)
        window = d3[lo:hi]
    else:
        window = d3
    return RegularityReport(
        max_second_diff=float(np.max(np.abs(d2[keep]))),
        second_diff_jump_at_fb=jump,
        max_third_diff=float(np.max(np.abs(window))) if window.size else 0.0,
        grid_n=n,
        fb_index=k,
    )


def _cell_curvatures(u: np.ndarray):
    """Slope, principal curvatures on cell midpoints for a radial graph."""
    n = u.size - 1
    p = np.diff(u) * n
    r = (np.arange(n) + 0.5) / n
    upp = np.empty(n)
    if n >= 3:
        upp[1:-1] = (p[2:] - p[:-2]) * n / 2.0
        # even extension gives p(-h/2) = -p(h/2)
        upp[0] = (p[1] + p[0]) * n / 2.0
        upp[-1] = (3.0 * p[-1] - 4.0 * p[-2] + p[-3]) * n / 2.0
    else:
        upp[:] = 0.0
    root = np.sqrt(1.0 + p * p)
    k1 = upp / root**3
    k2 = p / (r * root)
    return p, r, k1, k2


def _as_nodal(psi, n: int) -> np.ndarray:
    if isinstance(psi, RadialProfile):
        vals = psi.values
    elif callable(psi):
        vals = np.asarray(psi(radii(n)), dtype=float)
    else:
        vals = np.asarray(psi, dtype=float)
    if vals.shape != (n + 1,):
        raise ValueError(f"test function needs {n + 1} nodal values")
    if abs(vals[-1]) > 1e-12:
        raise ValueError("test function must vanish on the rim")
    return vals


def stability_form(profile: RadialProfile, c: float, psi,
                   ricci: float = 0.0, dh_normal: float = 0.0) -> StabilityResult:
    """Both sides of the stability inequality for a sheet bounding the region
    below it, with radial test function ``psi``.

    lhs = int |grad psi|^2 - (|A|^2 + Ric(nu, nu)) psi^2
    rhs = int (H c + d_nu h - H^2) psi^2

    Mean curvature is signed so the upward cap of radius 2/c has ``H = c``.
    ``ricci`` and ``dh_normal`` vanish in the flat cylinder with constant h.
    """
    u = profile.values
    n = profile.n
    vals = _as_nodal(psi, n)
    p, r, k1, k2 = _cell_curvatures(u)
    psi_mid = 0.5 * (vals[:-1] + vals[1:])
    dpsi = np.diff(vals) * n
    root = np.sqrt(1.0 + p * p)
    dA = 2.0 * np.pi * r * root / n
    A2 = k1 * k1 + k2 * k2
    H = -(k1 + k2)
    lhs = float(np.sum((dpsi * dpsi / (root * root) - (A2 + ricci) * psi_mid**2) * dA))
    rhs = float(np.sum((H * c + dh_normal - H * H) * psi_mid**2 * dA))
    return StabilityResult(lhs=lhs, rhs=rhs, margin=lhs - rhs)


def _bump(k: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: (1.0 - r) ** k


def _parabolic(k: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda r: (1.0 - r * r) ** k


# polynomial bumps fixed in advance, all vanishing on the rim
STABILITY_SUITE: Sequence[Callable[[np.ndarray], np.ndarray]] = (
    _bump(1),
    _bump(2),
    _bump(3),
    _bump(4),
    _parabolic(1),
    _parabolic(2),
    _parabolic(3),
    lambda r: r * r * (1.0 - r),
    lambda r: np.cos(0.5 * np.pi * r) * (r < 1.0),
    lambda r: (1.0 - r) * (1.0 + 2.0 * r) ** 2,
)
