"""Command-line experiment runner.

    pmclab solve --c 1 --eps 0.1 --n 1000 --mode stack --out results/
    pmclab figure --case fig6
    pmclab sweep --c 1 --eps-from 0.05 --eps-to 0.45 --steps 40
    pmclab regularity --c 1 --eps 0.1 --ns 250,500,1000,2000
    pmclab stability --c 1 --eps 0.4 --mode single
    pmclab constants --v 19.7392088 --kappa 0 --solve-max-c

Exit codes: 0 success, 1 usage error, 2 solver did not converge.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, constants, geometry, output, solver
from .errors import MaxItersExceeded, NoContact, NoThreshold, PMCError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CONVERGENCE = 2

FIGURE_CASES = {
    "fig4": 0.4,
    "fig5": 2.0 - math.sqrt(3.0),
    "fig6": 0.1,
}

SWEEP_COLUMNS = [
    "eps", "area", "volume", "total", "iterations", "kkt_residual", "converged",
    "contact_nodes", "r_star", "max_second_diff", "second_diff_jump_at_fb",
    "max_third_diff", "stability_min_margin",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--config", help="INI file with an [experiment] section of flag defaults")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default: 0)")


def _problem_flags(p: argparse.ArgumentParser, n_default: int = 1000) -> None:
    p.add_argument("--c", type=float, default=1.0, help="prescribing constant (default: 1)")
    p.add_argument("--eps", type=float, default=0.1, help="rim half-separation (default: 0.1)")
    p.add_argument("--n", type=int, default=n_default, help=f"grid cells (default: {n_default})")
    p.add_argument("--mode", choices=[m.value for m in geometry.Mode], default="stack")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pmclab", description="Stacked prescribed-mean-curvature sheets in a cylinder.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.set_defaults(_subparsers=sub.choices)

    p = sub.add_parser("solve", help="minimize one configuration")
    _problem_flags(p)
    p.add_argument("--competitors", type=int, default=50,
                   help="random competitors checked against a single-sheet minimizer")
    _common(p)

    p = sub.add_parser("figure", help="reproduce the disjoint / touching / interface regimes")
    p.add_argument("--case", choices=sorted(FIGURE_CASES), required=True)
    p.add_argument("--n", type=int, default=1000)
    _common(p)

    p = sub.add_parser("sweep", help="solve over a uniform range of eps")
    _problem_flags(p)
    p.add_argument("--eps-from", type=float, default=0.05)
    p.add_argument("--eps-to", type=float, default=0.45)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--jobs", type=int, default=1, help="parallel solver processes")
    _common(p)

    p = sub.add_parser("regularity", help="second/third differences under grid refinement")
    _problem_flags(p)
    p.add_argument("--ns", default="250,500,1000,2000", help="comma-separated grid sizes")
    _common(p)

    p = sub.add_parser("stability", help="second-variation form over the fixed test suite")
    _problem_flags(p)
    _common(p)

    p = sub.add_parser("constants", help="evaluate delta1, delta2, eta and the mass bounds")
    p.add_argument("--v", type=float, default=2.0 * math.pi**2, help="volume bound (default: 2 pi^2)")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--solve-max-c", action="store_true")
    p.add_argument("--delta", type=float, default=constants.DEFAULT_DELTA)
    p.add_argument("--c1", type=float, default=constants.DEFAULT_C1)
    p.add_argument("--theta", type=float, default=0.25)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--rho0", type=float, default=1.0)
    p.add_argument("--beta0", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--vol-m", type=float, default=None, help="volume of M (default: --v)")
    _common(p)
    return parser


def _read_config(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    if "experiment" not in cp:
        raise UsageError(f"{path} has no [experiment] section")
    return {k.replace("-", "_"): v for k, v in cp["experiment"].items()}


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    """Parse flags; ``--config`` values become subcommand defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = _read_config(args.config)
        sub = args._subparsers[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(values) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # string defaults go through each flag's type conversion
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def _problem(args, eps=None, n=None) -> geometry.StackProblem:
    try:
        return geometry.StackProblem(
            c=args.c,
            eps=args.eps if eps is None else eps,
            n=args.n if n is None else n,
            mode=geometry.Mode(args.mode),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _solve(problem: geometry.StackProblem) -> tuple[solver.SolveReport, bool]:
    try:
        return solver.solve(problem), True
    except MaxItersExceeded as exc:
        return exc.report, False


def _r_star(report: solver.SolveReport) -> float | None:
    try:
        return analysis.contact_radius(report)
    except PMCError:
        return None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out: Path, stem: str, report, extra: dict, header) -> None:
    scalars = output.report_scalars(report, _r_star(report))
    scalars.update(extra)
    (out / f"{stem}.csv").write_text(output.report_csv(report))
    (out / f"{stem}_report.txt").write_text(output.key_value_text(scalars, header))
    (out / f"{stem}_report.json").write_text(output.scalars_json(scalars))


def _competitor_gap(report: solver.SolveReport, count: int, seed: int) -> float:
    """Smallest energy(competitor) - energy(minimizer) over random admissible
    competitors sharing the rim value."""
    problem = report.problem
    rng = np.random.default_rng(seed)
    base = report.lower.values
    n = base.size - 1
    r = np.arange(n + 1) / n
    best = math.inf
    for _ in range(count):
        bump = np.zeros(n + 1)
        for k in range(1, 6):
            bump += rng.normal(scale=0.05 / k) * np.sin(k * np.pi * (1.0 - r) / 2.0) ** 2
        bump[-1] = 0.0
        cand = np.clip(base + bump, -1.0, 1.0)
        cand[-1] = base[-1]
        e = geometry.ah_energy(problem, geometry.RadialProfile(cand)).total
        best = min(best, e - report.energy.total)
    return best


def run_solve(args) -> int:
    problem = _problem(args)
    report, ok = _solve(problem)
    extra = {"seed": args.seed}
    if problem.mode is geometry.Mode.SINGLE and args.competitors > 0:
        extra["competitor_min_gap"] = _competitor_gap(report, args.competitors, args.seed)
    if problem.mode is not geometry.Mode.SINGLE and 0 < problem.c <= 2:
        try:
            extra["r_star_oracle"] = solver.shooting_oracle(problem.c, problem.eps)
        except NoContact:
            extra["r_star_oracle"] = None
    out = _out_dir(args)
    scalars = output.report_scalars(report, _r_star(report))
    scalars.update(extra)
    (out / "profile.csv").write_text(output.report_csv(report))
    header = [f"pmclab solve c={problem.c!r} eps={problem.eps!r} n={problem.n} "
              f"mode={problem.mode.value} seed={args.seed}"]
    (out / "report.txt").write_text(output.key_value_text(scalars, header))
    (out / "report.json").write_text(output.scalars_json(scalars))
    print(output.key_value_text(scalars, header), end="")
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def run_figure(args) -> int:
    eps = FIGURE_CASES[args.case]
    problem = geometry.StackProblem(c=1.0, eps=eps, n=args.n, mode=geometry.Mode.STACK)
    report, ok = _solve(problem)
    out = _out_dir(args)
    gap = report.upper.values - report.lower.values
    mask = report.contact_mask()
    width = float(report.r[mask].max() - report.r[mask].min()) if mask.any() else 0.0
    extra = {
        "case": args.case,
        "apex_gap": float(gap[0]),
        "min_gap": float(gap.min()),
        "contact_width": width,
        "seed": args.seed,
    }
    header = [f"pmclab figure case={args.case} c=1 eps={eps!r} n={args.n} seed={args.seed}"]
    _write_report(out, args.case, report, extra, header)
    title = f"c = 1, eps = {eps:.6f}, n = {args.n}"
    (out / f"{args.case}.svg").write_text(output.profile_svg(report, title))
    print(output.key_value_text(extra, header), end="")
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def _sweep_row(problem: geometry.StackProblem) -> dict:
    report, ok = _solve(problem)
    row = {
        "eps": problem.eps,
        "area": report.energy.area,
        "volume": report.energy.volume,
        "total": report.energy.total,
        "iterations": report.iterations,
        "kkt_residual": report.kkt_residual,
        "converged": ok,
        "contact_nodes": int(report.contact_mask().sum()),
        "r_star": _r_star(report),
    }
    reg = analysis.regularity_scan(report, problem)
    row["max_second_diff"] = reg.max_second_diff
    row["second_diff_jump_at_fb"] = reg.second_diff_jump_at_fb
    row["max_third_diff"] = reg.max_third_diff
    margins = [analysis.stability_form(report.lower, problem.c, psi).margin
               for psi in analysis.STABILITY_SUITE]
    row["stability_min_margin"] = min(margins)
    return row


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sweep_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[k]) for k in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def sweep_eps(eps_from: float, eps_to: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise UsageError("--steps must be >= 1")
    if steps == 1:
        return np.array([eps_from])
    return np.linspace(eps_from, eps_to, steps)


def run_sweep(args) -> int:
    if not (0 < args.eps_from < 1 and 0 < args.eps_to < 1):
        raise UsageError("eps range must lie inside (0, 1)")
    grid = sweep_eps(args.eps_from, args.eps_to, args.steps)
    problems = [_problem(args, eps=float(e)) for e in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_row, problems))
    else:
        rows = [_sweep_row(p) for p in problems]
    rows.sort(key=lambda row: row["eps"])
    out = _out_dir(args)
    text = sweep_csv(rows)
    (out / "sweep.csv").write_text(text)
    print(text, end="")
    return EXIT_OK if all(row["converged"] for row in rows) else EXIT_NO_CONVERGENCE


def run_regularity(args) -> int:
    try:
        ns = [int(s) for s in args.ns.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --ns: {args.ns}") from exc
    lines = ["n,max_second_diff,second_diff_jump_at_fb,max_third_diff,r_star"]
    status = EXIT_OK
    for n in ns:
        problem = _problem(args, n=n)
        report, ok = _solve(problem)
        if not ok:
            status = EXIT_NO_CONVERGENCE
        reg = analysis.regularity_scan(report, problem)
        cells = [n, reg.max_second_diff, reg.second_diff_jump_at_fb, reg.max_third_diff,
                 _r_star(report)]
        lines.append(",".join(_csv_cell(v) for v in cells))
    text = "\n".join(lines) + "\n"
    (_out_dir(args) / "regularity.csv").write_text(text)
    print(text, end="")
    return status


def run_stability(args) -> int:
    problem = _problem(args)
    report, ok = _solve(problem)
    sheets = [("lower", report.lower)]
    if problem.mode is geometry.Mode.MEMBRANE:
        sheets.append(("upper", report.upper.reflected()))
    lines = ["sheet,test_function,lhs,rhs,margin"]
    for name, profile in sheets:
        for i, psi in enumerate(analysis.STABILITY_SUITE):
            s = analysis.stability_form(profile, problem.c, psi)
            lines.append(f"{name},{i},{s.lhs!r},{s.rhs!r},{s.margin!r}")
    text = "\n".join(lines) + "\n"
    (_out_dir(args) / "stability.csv").write_text(text)
    print(text, end="")
    return EXIT_OK if ok else EXIT_NO_CONVERGENCE


def run_constants(args) -> int:
    try:
        local = constants.LocalControlConstants(
            rho0=args.rho0, mu=args.mu, beta0=args.beta0, delta_msy=args.delta,
            c1=args.c1, vol_M=args.v if args.vol_m is None else args.vol_m,
            c=args.c, theta=args.theta, beta=args.beta,
        )
        mass = constants.MassBoundInputs(v=args.v, kappa=args.kappa, c=args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    threshold_line = ""
    try:
        report = constants.constants_report(local, mass, solve_max=args.solve_max_c)
    except NoThreshold as exc:
        report = constants.constants_report(local, mass)
        threshold_line = f"c_max=NoThreshold ({exc})\n"
    text = report.as_text() + threshold_line
    out = _out_dir(args)
    (out / "constants.txt").write_text(text)
    (out / "constants.csv").write_text(report.csv_header() + "\n" + report.csv_row() + "\n")
    print(text, end="")
    return EXIT_OK


COMMANDS = {
    "solve": run_solve,
    "figure": run_figure,
    "sweep": run_sweep,
    "regularity": run_regularity,
    "stability": run_stability,
    "constants": run_constants,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (UsageError, PMCError) as exc:
        print(f"pmclab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
