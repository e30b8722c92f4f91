"""Minimizers of the discrete A^c energy for one sheet, a symmetric stack,
and an unconstrained ordered pair of sheets.

All three problems are convex: the area density sqrt(1 + p^2) is convex in
the slope and the volume term is linear.  Each is cast as

    minimize f(x)  subject to  x <= ub

and solved by projected gradient (lumped-mass metric) until the active set
settles, followed by a projected Newton iteration that freezes the
near-active bound constraints and takes a Newton step on the rest.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.sparse.linalg import spsolve

from .errors import MaxItersExceeded, NoContact, NonCoercive
from .geometry import (
    EnergyBreakdown,
    Mode,
    RadialProfile,
    StackProblem,
    ah_energy,
    cap_params,
    touching_eps,
    volume_weights,
)

__all__ = [
    "StepRule",
    "SolverConfig",
    "SolveReport",
    "solve",
    "solve_single_sheet",
    "solve_symmetric_stack",
    "solve_two_membrane",
    "shooting_oracle",
    "contact_intervals",
    "initial_profile",
]

SQRT2 = math.sqrt(2.0)


class StepRule(enum.Enum):
    FIXED = "fixed"
    ARMIJO = "armijo"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 200_000
    grad_tol: float = 1e-9
    step_rule: StepRule = StepRule.ARMIJO
    shrink: float = 0.5
    slope: float = 1e-4
    active_set_refine: bool = True
    # projected-gradient iterations with a frozen active set before Newton
    stall_iters: int = 25
    # hard cap on projected-gradient iterations before Newton takes over
    warmup_iters: int = 500
    contact_tol: float = 1e-6
    # nested-grid continuation: solve on halved grids down to this size first
    multilevel: bool = True
    coarsest: int = 32
    # width of the band next to a bound treated as active in the Newton phase
    active_band: float = 1e-3

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0 < self.slope < 1:
            raise ValueError("slope must lie in (0, 1)")
        if not isinstance(self.step_rule, StepRule):
            object.__setattr__(self, "step_rule", StepRule(self.step_rule))


@dataclass
class SolveReport:
    lower: RadialProfile
    upper: RadialProfile
    energy: EnergyBreakdown
    iterations: int
    kkt_residual: float
    contact: list[tuple[int, int]]
    converged: bool
    problem: StackProblem | None = None
    history: list[float] = field(default_factory=list, repr=False)
    newton_iterations: int = 0

    @property
    def r(self) -> np.ndarray:
        return self.lower.r

    def contact_mask(self) -> np.ndarray:
        mask = np.zeros(self.lower.n + 1, dtype=bool)
        for a, b in self.contact:
            mask[a:b + 1] = True
        return mask


# ---------------------------------------------------------------------------
# sheet-level energy pieces, on the full nodal vector (boundary included)

class _Sheet:
    """Area and volume derivatives of one radial sheet on an n-cell grid."""

    def __init__(self, n: int):
        self.n = n
        self.h = 1.0 / n
        # 2 pi r_{i+1/2} h
        self.a = 2.0 * np.pi * (np.arange(n) + 0.5) / n * self.h
        self.w = volume_weights(n)

    def area(self, u):
        p = np.diff(u) * self.n
        return float(np.dot(self.a, np.sqrt(1.0 + p * p)))

    def area_change(self, u, e):
        """area(u + e) - area(u), formed from the increment ``e`` so that
        tiny steps keep full relative precision."""
        p = np.diff(u) * self.n
        dp = np.diff(e) * self.n
        q = p + dp
        s = np.sqrt(1.0 + p * p) + np.sqrt(1.0 + q * q)
        return float(np.dot(self.a, dp * (2.0 * p + dp) / s))

    def area_grad(self, u):
        p = np.diff(u) * self.n
        flux = self.a * p / np.sqrt(1.0 + p * p) * self.n
        g = np.zeros(self.n + 1)
        g[:-1] -= flux
        g[1:] += flux
        return g

    def area_hess(self, u):
        p = np.diff(u) * self.n
        k = self.a * (1.0 + p * p) ** -1.5 * self.n**2
        diag = np.zeros(self.n + 1)
        diag[:-1] += k
        diag[1:] += k
        return diag, -k


def _tridiag(diag, off):
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


class _Objective:
    """Reduced energy over the free unknowns of one problem mode."""

    def __init__(self, problem: StackProblem):
        self.problem = problem
        self.c = problem.c
        self.n = problem.n
        self.sheet = _Sheet(problem.n)
        n = self.n
        w = self.sheet.w[:-1]
        if problem.mode is Mode.SINGLE:
            self.ub = np.full(n, 1.0)
            self.mass = w.copy()
        elif problem.mode is Mode.STACK:
            self.ub = np.zeros(n)
            self.mass = 2.0 * w
        else:
            # x = (sigma, delta); u1 = (s + d)/sqrt2, u2 = (s - d)/sqrt2, d <= 0
            self.ub = np.concatenate((np.full(n, np.inf), np.zeros(n)))
            self.mass = np.concatenate((w, w))

    # -- variable maps --------------------------------------------------
    def sheets(self, x):
        eps = self.problem.eps
        n = self.n
        if self.problem.mode is Mode.MEMBRANE:
            s, d = x[:n], x[n:]
            u1 = np.append((s + d) / SQRT2, -eps)
            u2 = np.append((s - d) / SQRT2, eps)
            return u1, u2
        u = np.append(x, -eps)
        return u, -u

    def pack(self, lower, upper=None):
        n = self.n
        if self.problem.mode is Mode.MEMBRANE:
            u1, u2 = lower[:n], upper[:n]
            return np.concatenate(((u1 + u2) / SQRT2, (u1 - u2) / SQRT2))
        return np.array(lower[:n], dtype=float)

    def project(self, x):
        return np.minimum(x, self.ub)

    # -- energy ---------------------------------------------------------
    def value(self, x):
        u1, u2 = self.sheets(x)
        w = self.sheet.w
        if self.problem.mode is Mode.SINGLE:
            return self.sheet.area(u1) - self.c * float(np.dot(w, u1 + 1.0))
        return (self.sheet.area(u1) + self.sheet.area(u2)
                - self.c * float(np.dot(w, (u1 + 1.0) + (1.0 - u2))))

    def increments(self, e):
        """Nodal increments of both sheets for a step ``e`` in x."""
        n = self.n
        if self.problem.mode is Mode.MEMBRANE:
            s, d = e[:n], e[n:]
            return np.append((s + d) / SQRT2, 0.0), np.append((s - d) / SQRT2, 0.0)
        e1 = np.append(e, 0.0)
        return e1, -e1

    def change(self, x, y):
        """f(y) - f(x), accumulated cellwise from the step ``y - x``."""
        u1, u2 = self.sheets(x)
        e1, e2 = self.increments(y - x)
        w = self.sheet.w
        if self.problem.mode is Mode.SINGLE:
            return self.sheet.area_change(u1, e1) - self.c * float(np.dot(w, e1))
        return (self.sheet.area_change(u1, e1) + self.sheet.area_change(u2, e2)
                - self.c * float(np.dot(w, e1 - e2)))

    def grad(self, x):
        n = self.n
        u1, u2 = self.sheets(x)
        w = self.sheet.w
        g1 = self.sheet.area_grad(u1)[:n] - self.c * w[:n]
        if self.problem.mode is Mode.SINGLE:
            return g1
        g2 = self.sheet.area_grad(u2)[:n] + self.c * w[:n]
        if self.problem.mode is Mode.STACK:
            # u2 = -u1
            return g1 - g2
        return np.concatenate(((g1 + g2) / SQRT2, (g1 - g2) / SQRT2))

    def hess(self, x):
        n = self.n
        u1, u2 = self.sheets(x)
        d1, o1 = self.sheet.area_hess(u1)
        H1 = _tridiag(d1[:n], o1[:n - 1])
        if self.problem.mode is Mode.SINGLE:
            return H1
        d2, o2 = self.sheet.area_hess(u2)
        H2 = _tridiag(d2[:n], o2[:n - 1])
        if self.problem.mode is Mode.STACK:
            return (H1 + H2).tocsr()
        P = 0.5 * (H1 + H2)
        Q = 0.5 * (H1 - H2)
        return sp.bmat([[P, Q], [Q, P]], format="csr")

    def lipschitz(self):
        """Bound on the Hessian in the lumped-mass metric, valid everywhere."""
        H = self.hess(np.zeros_like(self.ub))
        rowsum = np.asarray(abs(H).sum(axis=1)).ravel()
        return float(np.max(rowsum / self.mass))

    def kkt(self, x, g):
        r = g / self.mass
        at_bound = x >= self.ub
        viol = np.where(at_bound, np.maximum(r, 0.0), np.abs(r))
        return float(np.max(viol)) if viol.size else 0.0


# ---------------------------------------------------------------------------

@dataclass
class _State:
    x: np.ndarray
    f: float
    g: np.ndarray
    kkt: float
    iterations: int = 0
    newton_iterations: int = 0
    history: list = field(default_factory=list)


def _projected_gradient(obj: _Objective, st: _State, cfg: SolverConfig, limit: int):
    """Projected gradient in the lumped-mass metric; stops early when the
    active set has not changed for ``cfg.stall_iters`` steps (if refining)."""
    L = obj.lipschitz()
    alpha = 1.0 / L
    active = st.x >= obj.ub
    unchanged = 0
    while st.iterations < limit and st.kkt > cfg.grad_tol:
        step = st.g / obj.mass
        if cfg.step_rule is StepRule.FIXED:
            y = obj.project(st.x - step / L)
            df = obj.change(st.x, y)
        else:
            alpha = min(2.0 * alpha, 1e3 / L)
            for _ in range(80):
                y = obj.project(st.x - alpha * step)
                df = obj.change(st.x, y)
                if df <= cfg.slope * float(np.dot(st.g, y - st.x)):
                    break
                alpha *= cfg.shrink
            else:
                return
        if df > 0:
            return
        st.x = y
        st.f += df
        st.g = obj.grad(y)
        st.kkt = obj.kkt(y, st.g)
        st.iterations += 1
        st.history.append(st.f)
        new_active = st.x >= obj.ub
        if np.array_equal(new_active, active):
            unchanged += 1
        else:
            unchanged = 0
            active = new_active
        if cfg.active_set_refine and unchanged >= cfg.stall_iters:
            return


def _projected_newton(obj: _Objective, st: _State, cfg: SolverConfig, limit: int):
    """Newton on the inactive set; near-active coordinates take a diagonally
    scaled gradient step.  The active set is re-derived every iteration."""
    while st.iterations < limit and st.kkt > cfg.grad_tol:
        x, g = st.x, st.g
        H = obj.hess(x)
        hdiag = H.diagonal()
        gap = float(np.max(np.abs(x - obj.project(x - g / hdiag)))) if x.size else 0.0
        band = min(cfg.active_band, gap)
        frozen = (x >= obj.ub - band) & (g < 0)
        free = ~frozen
        d = np.zeros_like(x)
        if free.any():
            idx = np.flatnonzero(free)
            Hff = H[idx][:, idx].tocsc()
            d[idx] = -spsolve(Hff, g[idx])
        if frozen.any():
            d[frozen] = -g[frozen] / hdiag[frozen]
        alpha = 1.0
        for _ in range(80):
            y = obj.project(x + alpha * d)
            df = obj.change(x, y)
            pred = alpha * float(np.dot(g[free], d[free])) + float(np.dot(g[frozen], (y - x)[frozen]))
            if df <= cfg.slope * pred:
                break
            alpha *= cfg.shrink
        else:
            return
        if df > 0 or not np.any(y != x):
            return
        st.x = y
        st.f += df
        st.g = obj.grad(y)
        st.kkt = obj.kkt(y, st.g)
        st.iterations += 1
        st.newton_iterations += 1
        st.history.append(st.f)


def contact_intervals(lower: np.ndarray, upper: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Maximal runs of nodes where ``upper - lower <= tol``, as inclusive pairs."""
    mask = (np.asarray(upper) - np.asarray(lower)) <= tol
    edges = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return [(int(a), int(b)) for a, b in zip(starts, ends)]


def initial_profile(problem: StackProblem) -> np.ndarray:
    """Line from min(0, cap apex) at the axis to -eps at the rim."""
    c, eps = problem.c, problem.eps
    if c == 0:
        apex = -eps
    elif c <= 2:
        apex = min(0.0, cap_params(c, eps).apex_height)
    else:
        apex = 0.0
    r = np.arange(problem.n + 1) / problem.n
    u = apex + (-eps - apex) * r
    u[-1] = -eps
    return u


def _levels(n: int, coarsest: int) -> list[int]:
    sizes = [n]
    while sizes[-1] > coarsest:
        sizes.append(max(coarsest, (sizes[-1] + 1) // 2))
    return sizes[::-1]


def _resample(values: np.ndarray, n: int) -> np.ndarray:
    src = np.linspace(0.0, 1.0, values.size)
    return np.interp(np.arange(n + 1) / n, src, values)


def _solve_level(problem: StackProblem, cfg: SolverConfig, u1: np.ndarray,
                 u2: np.ndarray) -> SolveReport:
    obj = _Objective(problem)
    x = obj.project(obj.pack(u1, u2))
    g = obj.grad(x)
    st = _State(x=x, f=obj.value(x), g=g, kkt=obj.kkt(x, g))
    st.history.append(st.f)

    if cfg.active_set_refine:
        _projected_gradient(obj, st, cfg, min(cfg.warmup_iters, cfg.max_iters))
        _projected_newton(obj, st, cfg, cfg.max_iters)
    else:
        _projected_gradient(obj, st, cfg, cfg.max_iters)

    v1, v2 = obj.sheets(st.x)
    lower = RadialProfile(v1)
    upper = RadialProfile(v2)
    if problem.mode is Mode.SINGLE:
        energy = ah_energy(problem, lower)
        contact = []
    else:
        energy = ah_energy(problem, lower, upper)
        contact = contact_intervals(v1, v2, cfg.contact_tol)
    return SolveReport(
        lower=lower,
        upper=upper,
        energy=energy,
        iterations=st.iterations,
        kkt_residual=st.kkt,
        contact=contact,
        converged=st.kkt <= cfg.grad_tol,
        problem=problem,
        history=st.history,
        newton_iterations=st.newton_iterations,
    )


def _run(problem: StackProblem, cfg: SolverConfig, u1: np.ndarray,
         u2: np.ndarray) -> SolveReport:
    """Solve on a ladder of grids, coarsest first, each level warm-started by
    interpolating the previous one.  The initial guess enters at the bottom."""
    sizes = _levels(problem.n, cfg.coarsest) if cfg.multilevel else [problem.n]
    total = 0
    report = None
    for n in sizes:
        level = replace(problem, n=n)
        if report is None:
            a, b = _resample(u1, n), _resample(u2, n)
        else:
            a, b = _resample(report.lower.values, n), _resample(report.upper.values, n)
        report = _solve_level(level, cfg, a, b)
        total += report.iterations
    report.iterations = total
    if not report.converged:
        raise MaxItersExceeded(
            f"stopped after {total} iterations with KKT residual {report.kkt_residual:.3e}",
            report,
        )
    return report


def _check_mode(problem, mode):
    if problem.mode is not mode:
        raise ValueError(f"expected a {mode.value} problem, got {problem.mode.value}")


def _single_init(problem, init):
    if init is None:
        u = initial_profile(problem)
    else:
        u = np.array(init, dtype=float)
        u[-1] = -problem.eps
    return u, -u


def solve_single_sheet(problem: StackProblem, cfg: SolverConfig | None = None,
                       init: np.ndarray | None = None) -> SolveReport:
    """Minimize one sheet with rim height -eps and no obstacle.

    The result is the discrete counterpart of the upward spherical cap of
    radius 2/c.  ``upper`` in the report is the mirror image ``-lower``.
    """
    _check_mode(problem, Mode.SINGLE)
    if problem.c > 2:
        raise NonCoercive(f"c = {problem.c} > 2: no cap spans the unit disk")
    return _run(problem, cfg or SolverConfig(), *_single_init(problem, init))


def solve_symmetric_stack(problem: StackProblem, cfg: SolverConfig | None = None,
                          init: np.ndarray | None = None) -> SolveReport:
    """Minimize ``2 E[u]`` over ``u <= 0``, the reflection-symmetric pair
    ``(u, -u)``."""
    _check_mode(problem, Mode.STACK)
    return _run(problem, cfg or SolverConfig(), *_single_init(problem, init))


def solve_two_membrane(problem: StackProblem, cfg: SolverConfig | None = None,
                       init: tuple[np.ndarray, np.ndarray] | None = None) -> SolveReport:
    """Minimize over ordered pairs ``u1 <= u2`` with no symmetry imposed.

    ``init`` is an optional ``(u1, u2)`` pair of nodal arrays on any uniform
    grid; by default the stack initial guess and its reflection are used.
    Rim values are reset to ``-eps`` and ``eps``.
    """
    _check_mode(problem, Mode.MEMBRANE)
    if init is None:
        u1 = initial_profile(problem)
        u2 = -u1
    else:
        u1, u2 = (np.array(a, dtype=float) for a in init)
        u1[-1], u2[-1] = -problem.eps, problem.eps
    return _run(problem, cfg or SolverConfig(), u1, u2)


def solve(problem: StackProblem, cfg: SolverConfig | None = None) -> SolveReport:
    if problem.mode is Mode.SINGLE:
        return solve_single_sheet(problem, cfg)
    if problem.mode is Mode.STACK:
        return solve_symmetric_stack(problem, cfg)
    return solve_two_membrane(problem, cfg)


# ---------------------------------------------------------------------------
# independent free-boundary oracle

def _rim_drop(r_star: float, c: float, tol: float) -> float:
    """Integral of u' from r_star to 1 for the sheet leaving the mid-plane
    flat at r_star: r u'/sqrt(1+u'^2) = -(c/2)(r^2 - r_star^2)."""

    def slope(r):
        s = -0.5 * c * (r - r_star * r_star / r) if r > 0 else 0.0
        return s / math.sqrt(1.0 - s * s)

    val, _ = quad(slope, r_star, 1.0, epsabs=tol, epsrel=tol, limit=200)
    return val


def shooting_oracle(c: float, eps: float, tol: float = 1e-10) -> float:
    """Radius of the flat contact disk of the symmetric stack, by bisection.

    Raises ``NoContact`` when ``eps`` is at or past the touching separation.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    t = touching_eps(c)
    if eps >= t:
        raise NoContact(f"eps = {eps} >= touching separation {t}")
    lo, hi = 0.0, 1.0
    # drop(r*) rises monotonically from -t at r* = 0 to 0 at r* = 1
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if _rim_drop(mid, c, tol) < -eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
