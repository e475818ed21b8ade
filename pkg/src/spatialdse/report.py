"""CSV and SVG report emission.

CSV is the authoritative output; charts are self-contained SVG regenerated
deterministically from the same data (no timestamps, stable float
formatting), so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c, "")) for c in columns])


PALETTE = (
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
    "#aa3377", "#bbbbbb", "#000000", "#e07020",
)

_W, _H = 720, 420
_ML, _MR, _MT, _MB = 70, 160, 40, 60


def _svg_header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
    ]


def _axes(parts: list[str], xlabel: str, ylabel: str) -> None:
    x0, y0, x1, y1 = _ML, _H - _MB, _W - _MR, _MT
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>'
    )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_H - 16}" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="20" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {(y0 + y1) / 2:.1f})">{ylabel}</text>'
    )


def _legend(parts: list[str], labels: list[str]) -> None:
    for k, label in enumerate(labels):
        color = PALETTE[k % len(PALETTE)]
        y = _MT + 16 * k
        parts.append(
            f'<rect x="{_W - _MR + 12}" y="{y}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(f'<text x="{_W - _MR + 27}" y="{y + 9}">{label}</text>')


def line_chart(
    path: str | Path,
    series: dict[str, list[tuple[float, float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    log_x: bool = False,
) -> None:
    """Multi-series line chart; x positions may be log2-scaled."""
    parts = _svg_header(title)
    xs = sorted({x for pts in series.values() for x, _ in pts})
    ys = [y for pts in series.values() for _, y in pts]
    if not xs or not ys:
        raise ValueError("line_chart needs at least one point")
    tx = (lambda x: math.log2(x)) if log_x else (lambda x: x)
    xmin, xmax = tx(xs[0]), tx(xs[-1])
    ymin, ymax = 0.0, max(ys) * 1.05 or 1.0
    span_x = (xmax - xmin) or 1.0
    plot_w, plot_h = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (tx(x) - xmin) / span_x * plot_w

    def py(y):
        return _H - _MB - (y - ymin) / (ymax - ymin) * plot_h

    _axes(parts, xlabel, ylabel)
    for x in xs:
        parts.append(
            f'<text x="{px(x):.1f}" y="{_H - _MB + 16}" text-anchor="middle">{fmt(x)}</text>'
        )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = ymin + frac * (ymax - ymin)
        parts.append(
            f'<text x="{_ML - 6}" y="{py(y) + 4:.1f}" text-anchor="end">{y:.2f}</text>'
        )
    for k, (label, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in sorted(pts))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
    _legend(parts, list(series))
    parts.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(parts) + "\n")


def grouped_bar_chart(
    path: str | Path,
    groups: list[str],
    series: dict[str, list[float]],
    title: str,
    ylabel: str,
) -> None:
    """One cluster of bars per group, one bar per series."""
    parts = _svg_header(title)
    _axes(parts, "", ylabel)
    n_groups, n_series = len(groups), len(series)
    if not n_groups or not n_series:
        raise ValueError("grouped_bar_chart needs groups and series")
    ymax = max(v for vals in series.values() for v in vals) * 1.05 or 1.0
    plot_w, plot_h = _W - _ML - _MR, _H - _MT - _MB
    group_w = plot_w / n_groups
    bar_w = group_w * 0.8 / n_series
    for g, group in enumerate(groups):
        gx = _ML + g * group_w
        parts.append(
            f'<text x="{gx + group_w / 2:.1f}" y="{_H - _MB + 16}" '
            f'text-anchor="middle">{group}</text>'
        )
        for s, (label, vals) in enumerate(series.items()):
            v = vals[g]
            h = v / ymax * plot_h
            x = gx + group_w * 0.1 + s * bar_w
            y = _H - _MB - h
            color = PALETTE[s % len(PALETTE)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                f'height="{h:.1f}" fill="{color}"/>'
            )
    for frac in (0.0, 0.5, 1.0):
        y = frac * ymax
        ypix = _H - _MB - frac * plot_h
        parts.append(
            f'<text x="{_ML - 6}" y="{ypix + 4:.1f}" text-anchor="end">{y:.2f}</text>'
        )
    _legend(parts, list(series))
    parts.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(parts) + "\n")
