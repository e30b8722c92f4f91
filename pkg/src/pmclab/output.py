"""CSV, key=value and SVG writers for reports."""

from __future__ import annotations

import json
from typing import Iterable, Mapping

import numpy as np

from .solver import SolveReport

SVG_WIDTH = 800
SVG_HEIGHT = 600
_MARGIN = 60


def _num(x) -> str:
    return repr(float(x))


def report_csv(report: SolveReport) -> str:
    mask = report.contact_mask()
    rows = ["r,u_lower,u_upper,contact"]
    for r, a, b, k in zip(report.r, report.lower.values, report.upper.values, mask):
        rows.append(f"{_num(r)},{_num(a)},{_num(b)},{int(k)}")
    return "\n".join(rows) + "\n"


def read_report_csv(text: str) -> dict[str, np.ndarray]:
    lines = text.strip("\n").split("\n")
    header = lines[0].split(",")
    if header != ["r", "u_lower", "u_upper", "contact"]:
        raise ValueError(f"unexpected header {lines[0]!r}")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return {
        "r": data[:, 0],
        "u_lower": data[:, 1],
        "u_upper": data[:, 2],
        "contact": data[:, 3].astype(int),
    }


def report_scalars(report: SolveReport, r_star: float | None = None) -> dict:
    out = {
        "area": report.energy.area,
        "volume": report.energy.volume,
        "total": report.energy.total,
        "iterations": report.iterations,
        "kkt_residual": report.kkt_residual,
        "converged": report.converged,
        "contact": [list(iv) for iv in report.contact],
        "r_star": r_star,
    }
    if report.problem is not None:
        p = report.problem
        out.update(c=p.c, eps=p.eps, n=p.n, mode=p.mode.value)
    return out


def key_value_text(items: Mapping, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    for key, value in items.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        elif value is None:
            text = "none"
        else:
            text = str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


def scalars_json(items: Mapping) -> str:
    return json.dumps(items, indent=2, sort_keys=True) + "\n"


def _polyline(xs, ys, to_px, colour):
    pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in map(to_px, xs, ys))
    return f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>'


def profile_svg(report: SolveReport, title: str = "") -> str:
    """Vertical cross-section of both sheets over -1 <= x <= 1 in the cylinder."""
    r = report.r
    x = np.concatenate((-r[:0:-1], r))

    def mirror(v):
        return np.concatenate((v[:0:-1], v))

    lower, upper = mirror(report.lower.values), mirror(report.upper.values)
    w = SVG_WIDTH - 2 * _MARGIN
    h = SVG_HEIGHT - 2 * _MARGIN

    def to_px(a, b):
        return _MARGIN + (a + 1.0) / 2.0 * w, _MARGIN + (1.0 - b) / 2.0 * h

    x0, y0 = to_px(-1.0, -1.0)
    x1, y1 = to_px(1.0, 1.0)
    xm, ym = to_px(0.0, 0.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" '
        f'width="{SVG_WIDTH}" height="{SVG_HEIGHT}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<line x1="{x0:.2f}" y1="{ym:.2f}" x2="{x1:.2f}" y2="{ym:.2f}" stroke="grey" stroke-dasharray="4 4"/>',
        f'<line x1="{xm:.2f}" y1="{y0:.2f}" x2="{xm:.2f}" y2="{y1:.2f}" stroke="grey" stroke-dasharray="4 4"/>',
        f'<text x="{x0:.2f}" y="{y0 + 20:.2f}" font-size="14">-1</text>',
        f'<text x="{x1 - 10:.2f}" y="{y0 + 20:.2f}" font-size="14">1</text>',
        f'<text x="{x0 - 30:.2f}" y="{y1 + 5:.2f}" font-size="14">1</text>',
        f'<text x="{x0 - 30:.2f}" y="{y0 + 5:.2f}" font-size="14">-1</text>',
        f'<text x="{SVG_WIDTH / 2:.2f}" y="30" font-size="16" text-anchor="middle">{title}</text>',
        _polyline(x, lower, to_px, "#1f77b4"),
        _polyline(x, upper, to_px, "#d62728"),
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
