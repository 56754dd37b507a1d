"""Minimal self-contained SVG log-log plots (no plotting dependency).

The data table is embedded as an XML comment so every plot is also a
machine-readable record of what it shows.
"""

from __future__ import annotations

import math

__all__ = ["loglog_svg"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo: float, hi: float):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(lo_e, hi_e + 1)]


def loglog_svg(
    path,
    xs,
    ys,
    fit_slope=None,
    fit_intercept=None,
    title="",
    xlabel="scale r",
    ylabel="residual",
):
    """Scatter of (xs, ys) on log-log axes with an optional fitted line."""
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        pts = [(1e-3, 1e-16)]
    xlo = min(p[0] for p in pts) / 1.5
    xhi = max(p[0] for p in pts) * 1.5
    ylo = min(p[1] for p in pts) / 2.0
    yhi = max(p[1] for p in pts) * 2.0

    def px(x):
        return _ML + (math.log10(x) - math.log10(xlo)) / (
            math.log10(xhi) - math.log10(xlo)
        ) * (_W - _ML - _MR)

    def py(y):
        return _H - _MB - (math.log10(y) - math.log10(ylo)) / (
            math.log10(yhi) - math.log10(ylo)
        ) * (_H - _MT - _MB)

    rows = ["<!-- data table", "x,y"]
    rows += [f"{float(x)!r},{float(y)!r}" for x, y in zip(xs, ys)]
    rows.append("-->")
    s = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        "\n".join(rows),
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        f'fill="none" stroke="black"/>',
        f'<text x="{_W/2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_W/2:.1f}" y="{_H-12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{_H/2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {_H/2:.1f})">{ylabel}</text>',
    ]
    for t in _ticks(xlo, xhi):
        if xlo <= t <= xhi:
            x = px(t)
            s.append(
                f'<line x1="{x:.2f}" y1="{_MT}" x2="{x:.2f}" y2="{_H-_MB}" '
                f'stroke="#ddd"/>'
            )
            s.append(
                f'<text x="{x:.2f}" y="{_H-_MB+16}" text-anchor="middle" '
                f'font-size="10">1e{int(math.log10(t))}</text>'
            )
    for t in _ticks(ylo, yhi):
        if ylo <= t <= yhi:
            y = py(t)
            s.append(
                f'<line x1="{_ML}" y1="{y:.2f}" x2="{_W-_MR}" y2="{y:.2f}" '
                f'stroke="#ddd"/>'
            )
            s.append(
                f'<text x="{_ML-6}" y="{y+3:.2f}" text-anchor="end" '
                f'font-size="10">1e{int(math.log10(t))}</text>'
            )
    if fit_slope is not None and fit_intercept is not None and math.isfinite(fit_slope):
        y1 = math.exp(fit_intercept) * xlo ** fit_slope
        y2 = math.exp(fit_intercept) * xhi ** fit_slope
        y1 = min(max(y1, ylo), yhi)
        y2 = min(max(y2, ylo), yhi)
        x1 = (y1 / math.exp(fit_intercept)) ** (1.0 / fit_slope) if fit_slope != 0 else xlo
        x2 = (y2 / math.exp(fit_intercept)) ** (1.0 / fit_slope) if fit_slope != 0 else xhi
        s.append(
            f'<line x1="{px(x1):.2f}" y1="{py(y1):.2f}" x2="{px(x2):.2f}" '
            f'y2="{py(y2):.2f}" stroke="#c33" stroke-width="1.5"/>'
        )
        s.append(
            f'<text x="{_W-_MR-8}" y="{_MT+16}" text-anchor="end" font-size="12" '
            f'fill="#c33">slope {fit_slope:.3f}</text>'
        )
    for x, y in pts:
        s.append(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="4" fill="#225" '
            f'fill-opacity="0.8"/>'
        )
    s.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(s) + "\n")
