"""Minimal log-log SVG plots of scaling reports (no plotting library)."""

from __future__ import annotations

import math

from .verify import ScalingReport

WIDTH, HEIGHT = 560, 400
MARGIN = 60


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def scaling_svg(report: ScalingReport) -> str:
    """Points, fitted line and a target-slope guide on log10 axes."""
    pts = [(t, e) for t, _, e in report.points if e > 0]
    if not pts:
        pts = [(t, report.floor) for t, _, _ in report.points]
    lx = [math.log10(t) for t, _ in pts]
    ly = [math.log10(e) for _, e in pts]
    ly.append(math.log10(report.floor))
    x0, x1 = math.floor(min(lx)), math.ceil(max(lx))
    y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v: float) -> float:
        return MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def sy(v: float) -> float:
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" '
        'fill="none" stroke="black"/>',
    ]
    for k in range(x0, x1 + 1):
        out.append(f'<line x1="{_fmt(sx(k))}" y1="{HEIGHT - MARGIN}" x2="{_fmt(sx(k))}" '
                   f'y2="{HEIGHT - MARGIN + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(sx(k))}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1):
        out.append(f'<line x1="{MARGIN - 5}" y1="{_fmt(sy(k))}" x2="{MARGIN}" y2="{_fmt(sy(k))}" stroke="black"/>')
        out.append(f'<text x="{MARGIN - 8}" y="{_fmt(sy(k) + 4)}" text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">T</text>')
    out.append(f'<text x="15" y="{HEIGHT / 2}" transform="rotate(-90 15 {HEIGHT / 2})" '
               'text-anchor="middle">error</text>')

    floor_y = math.log10(report.floor)
    if y0 <= floor_y <= y1:
        out.append(f'<line x1="{MARGIN}" y1="{_fmt(sy(floor_y))}" x2="{WIDTH - MARGIN}" '
                   f'y2="{_fmt(sy(floor_y))}" stroke="gray" stroke-dasharray="2,3"/>')

    fitted = [(math.log10(t), math.log10(e)) for t, _, e in report.points if e > report.floor]
    if fitted and math.isfinite(report.fitted_slope):
        a, b = min(v for v, _ in fitted), max(v for v, _ in fitted)
        c = report.fitted_intercept / math.log(10)
        line = [(a, report.fitted_slope * a + c), (b, report.fitted_slope * b + c)]
        out.append(_segment(line, sx, sy, "steelblue", ""))
        # target guide through the largest-T fitted point
        gx, gy = max(fitted)
        guide = [(a, gy + report.target_slope * (a - gx)), (b, gy + report.target_slope * (b - gx))]
        out.append(_segment(guide, sx, sy, "firebrick", ' stroke-dasharray="6,4"'))
    for t, _, e in report.points:
        if e <= 0:
            continue
        colour = "gray" if e <= report.floor else "black"
        out.append(f'<circle cx="{_fmt(sx(math.log10(t)))}" cy="{_fmt(sy(math.log10(e)))}" r="3" fill="{colour}"/>')

    title = (f"{report.model.variant} {report.mode} L={report.order}: slope "
             f"{report.fitted_slope:.3f} (target {report.target_slope:g})")
    if report.floor_flagged:
        title += " [floor reached]"
    out.append(f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-size="13">{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _segment(line, sx, sy, colour: str, extra: str) -> str:
    (xa, ya), (xb, yb) = line
    return (f'<line x1="{_fmt(sx(xa))}" y1="{_fmt(sy(ya))}" x2="{_fmt(sx(xb))}" y2="{_fmt(sy(yb))}" '
            f'stroke="{colour}" stroke-width="1.5"{extra}/>')
