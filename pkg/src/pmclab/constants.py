"""Explicit constants of the regularity theory and the min-max mass bounds.

Everything here is closed-form arithmetic in user-supplied inputs; the thin
tube constants ``delta`` and ``c1`` have no known numeric values and are
treated as parameters.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import Inapplicable, NoThreshold

__all__ = [
    "LocalControlConstants",
    "MassBoundInputs",
    "MassBounds",
    "ConstantsReport",
    "delta1",
    "delta2",
    "eta",
    "mass_bounds",
    "solve_c_max",
    "check_iso_pmc",
    "constants_report",
]

DEFAULT_DELTA = 0.1
DEFAULT_C1 = 1.0


@dataclass(frozen=True)
class LocalControlConstants:
    rho0: float = 1.0
    mu: float = 1.0
    beta0: float = 1.0
    delta_msy: float = DEFAULT_DELTA
    c1: float = DEFAULT_C1
    vol_M: float = 1.0
    c: float = 0.0
    theta: float = 0.25
    beta: float = 1.0

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.beta0 >= 1:
            raise ValueError("beta0 must be >= 1")
        if not 0 < self.delta_msy < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if not self.vol_M > 0:
            raise ValueError("vol_M must be positive")
        if not self.c >= 0:
            raise ValueError("c must be >= 0")
        if not 0 < self.theta <= 0.5:
            raise ValueError("theta must lie in (0, 1/2]")
        if not self.beta >= 1:
            raise ValueError("beta must be >= 1")


def _delta_min(delta, width, beta, c1, c, vol_M):
    sb = math.sqrt(beta)
    return min(
        delta,
        width / ((1.0 + 128.0 * c1) * sb),
        width / (9.0 * sb * math.sqrt(1.0 / 32.0 + c * c1)),
        (vol_M / (4.0 * c1)) ** (1.0 / 3.0),
        1.0,
    )


def delta1(k: LocalControlConstants) -> float:
    """Smallness scale for the area comparison estimate (width theta, constant beta)."""
    return _delta_min(k.delta_msy, k.theta, k.beta, k.c1, k.c, k.vol_M)


def delta2(k: LocalControlConstants) -> float:
    """Same minimum with theta -> rho0/2 and beta -> beta0."""
    return _delta_min(k.delta_msy, k.rho0 / 2.0, k.beta0, k.c1, k.c, k.vol_M)


def eta(k: LocalControlConstants) -> float:
    """Volume threshold below which isoperimetry controls the A^c energy."""
    denom = 8.0 * k.c**3 * k.c1**2
    # c = 0, or c so small that c^3 underflows: the term is inactive
    middle = math.inf if denom == 0 else 1.0 / denom
    return min(k.vol_M / 2.0, middle, k.c1 * k.delta_msy**3)


@dataclass(frozen=True)
class MassBoundInputs:
    v: float
    kappa: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("v must be positive")
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if not self.c >= 0:
            raise ValueError("c must be >= 0")


@dataclass(frozen=True)
class MassBounds:
    upper: float
    lower: float
    density_one_forced: bool


def _upper(v, c):
    return 4.0 * math.pi + v * c


def _lower(kappa, c):
    return 8.0 * math.pi / ((1.0 + kappa) ** 2 + c * c / 4.0)


def mass_bounds(inputs: MassBoundInputs) -> MassBounds:
    """Width comparison (upper) and Willmore monotonicity at a density-two
    point (lower).  When lower > upper no such point can exist."""
    up = _upper(inputs.v, inputs.c)
    lo = _lower(inputs.kappa, inputs.c)
    return MassBounds(upper=up, lower=lo, density_one_forced=lo > up)


def solve_c_max(v: float, kappa: float = 0.0, tol: float = 1e-10) -> float:
    """Largest c for which the density-one argument goes through.

    Bisection on ``lower(c) - upper(c)``, which decreases strictly in c,
    over the bracket (0, 2).
    """
    MassBoundInputs(v=v, kappa=kappa)

    def gap(c):
        return _lower(kappa, c) - _upper(v, c)

    lo, hi = 0.0, 2.0
    if gap(lo) <= 0:
        raise NoThreshold(f"lower <= upper already at c = 0 (v={v}, kappa={kappa})")
    if gap(hi) >= 0:
        raise NoThreshold("bounds do not cross below c = 2")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_iso_pmc(area: float, volume: float, c: float, eta_val: float,
                  c1: float = DEFAULT_C1) -> bool:
    """Whether ``volume <= c1 area^{3/2}`` and ``area - c volume >= area/2``
    hold for a region of volume at most ``eta_val``."""
    if volume > eta_val:
        raise Inapplicable(f"volume {volume} exceeds eta = {eta_val}")
    iso = volume <= c1 * area**1.5
    pmc = area - c * volume >= 0.5 * area
    return bool(iso and pmc)


@dataclass(frozen=True)
class ConstantsReport:
    delta1: float
    delta2: float
    eta: float
    mass_upper: float
    mass_lower: float
    density_one_forced: bool
    c_max: float | None = None
    inputs: dict | None = None

    def as_text(self) -> str:
        """key=value lines; c_max is rounded to six decimals, the CSV row keeps
        full precision."""
        lines = []
        for key, value in asdict(self).items():
            if key == "inputs" or (key == "c_max" and value is None):
                continue
            if key == "c_max":
                lines.append(f"c_max={value:.6f}")
                continue
            lines.append(f"{key}={_fmt(value)}")
        for key, value in (self.inputs or {}).items():
            lines.append(f"input.{key}={_fmt(value)}")
        return "\n".join(lines) + "\n"

    def csv_header(self) -> str:
        return ",".join(k for k in asdict(self) if k != "inputs")

    def csv_row(self) -> str:
        return ",".join(_fmt(v) for k, v in asdict(self).items() if k != "inputs")


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def constants_report(local: LocalControlConstants, mass: MassBoundInputs,
                     solve_max: bool = False) -> ConstantsReport:
    bounds = mass_bounds(mass)
    c_max = None
    if solve_max:
        c_max = solve_c_max(mass.v, mass.kappa)
    inputs = {**asdict(local), **{f"mass_{k}": v for k, v in asdict(mass).items()}}
    return ConstantsReport(
        delta1=delta1(local),
        delta2=delta2(local),
        eta=eta(local),
        mass_upper=bounds.upper,
        mass_lower=bounds.lower,
        density_one_forced=bounds.density_one_forced,
        c_max=c_max,
        inputs=inputs,
    )
