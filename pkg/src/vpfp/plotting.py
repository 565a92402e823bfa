"""Log-log convergence plot emitted as a self-contained SVG (no renderer).

Scatter of the sweep error series against epsilon with their least-squares
fit lines and a dashed reference line of the theoretical slope.
"""

from __future__ import annotations

import csv
import math

from .diagnostics import fit_rate

SERIES = [
    ("err_total", "total", "#1f77b4"),
    ("err_E1", "E1", "#d62728"),
    ("err_E2", "E2", "#2ca02c"),
    ("err_E3", "E3", "#9467bd"),
    ("field_disc_at_T", "field gap", "#ff7f0e"),
]

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 150, 20, 50


def _read_sweep_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"empty sweep CSV: {path}")
        missing = {"epsilon", *{name for name, _, _ in SERIES}} - set(reader.fieldnames)
        if missing:
            raise ValueError(f"malformed sweep CSV, missing columns: {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"sweep CSV has no data rows: {path}")
    try:
        eps = [float(r["epsilon"]) for r in rows]
        series = {name: [float(r[name]) for r in rows] for name, _, _ in SERIES}
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed sweep CSV: {exc}") from exc
    return eps, series


def _ticks(lo: float, hi: float):
    """Increasing tick positions in [lo, hi]: decades, refined to a 1-2-5
    grid whenever fewer than two decades fall inside the range."""
    decades = range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)
    ticks = [10.0**n for n in decades if lo <= 10.0**n <= hi]
    if len(ticks) < 2:
        ticks = [
            m * 10.0**n for n in decades for m in (1.0, 2.0, 5.0) if lo <= m * 10.0**n <= hi
        ]
    return sorted(set(ticks))


def emit_plot(sweep_csv, out_svg, beta_ref: float = 1.0) -> str:
    """Render sweep.csv to an SVG file; returns the output path."""
    eps, series = _read_sweep_csv(sweep_csv)
    values = [v for vals in series.values() for v in vals if v > 0]
    if not values:
        raise ValueError("no positive error values to plot")
    xlo, xhi = min(eps) / 1.5, max(eps) * 1.5
    ylo, yhi = min(values) / 2.0, max(values) * 2.0

    def px(e):
        return _ML + (math.log10(e) - math.log10(xlo)) / (math.log10(xhi) - math.log10(xlo)) * (
            _W - _ML - _MR
        )

    def py(v):
        return _H - _MB - (math.log10(v) - math.log10(ylo)) / (
            math.log10(yhi) - math.log10(ylo)
        ) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="#333"/>',
    ]
    # grid and tick labels (strictly increasing along each axis)
    for e in _ticks(xlo, xhi):
        x = px(e)
        parts.append(
            f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" y2="{_H - _MB}" stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{_H - _MB + 16}" text-anchor="middle">{e:g}</text>'
        )
    for v in _ticks(ylo, yhi):
        y = py(v)
        parts.append(
            f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W - _MR}" y2="{y:.1f}" stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{_ML - 6}" y="{y + 4:.1f}" text-anchor="end">{v:g}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" text-anchor="middle">epsilon</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">error</text>'
    )

    legend_y = _MT + 12
    for name, label, color in SERIES:
        vals = series[name]
        pts = [(e, v) for e, v in zip(eps, vals) if v > 0]
        if len(pts) >= 3:
            fit = fit_rate(pts)
            y1 = math.exp(fit.intercept + fit.slope * math.log(xlo * 1.2))
            y2 = math.exp(fit.intercept + fit.slope * math.log(xhi / 1.2))
            parts.append(
                f'<line x1="{px(xlo * 1.2):.1f}" y1="{py(max(y1, ylo)):.1f}" '
                f'x2="{px(xhi / 1.2):.1f}" y2="{py(min(y2, yhi)):.1f}" '
                f'stroke="{color}" stroke-width="1" opacity="0.6"/>'
            )
            label = f"{label} (slope {fit.slope:.2f})"
        for e, v in pts:
            parts.append(
                f'<circle cx="{px(e):.1f}" cy="{py(v):.1f}" r="4" fill="{color}" class="marker-{name}"/>'
            )
        parts.append(
            f'<circle cx="{_W - _MR + 12}" cy="{legend_y - 4}" r="4" fill="{color}"/>'
        )
        parts.append(f'<text x="{_W - _MR + 22}" y="{legend_y}">{label}</text>')
        legend_y += 18

    # dashed reference line with the theoretical slope, anchored mid-plot
    e_mid = math.sqrt(xlo * xhi)
    v_mid = math.sqrt(ylo * yhi)
    y1 = v_mid * (xlo * 1.2 / e_mid) ** beta_ref
    y2 = v_mid * (xhi / 1.2 / e_mid) ** beta_ref
    parts.append(
        f'<line x1="{px(xlo * 1.2):.1f}" y1="{py(y1):.1f}" x2="{px(xhi / 1.2):.1f}" '
        f'y2="{py(y2):.1f}" stroke="#000" stroke-dasharray="6 4"/>'
    )
    parts.append(
        f'<circle cx="{_W - _MR + 12}" cy="{legend_y - 4}" r="0" fill="none"/>'
        f'<text x="{_W - _MR + 22}" y="{legend_y}">slope {beta_ref:g} reference</text>'
    )
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    with open(out_svg, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return str(out_svg)
