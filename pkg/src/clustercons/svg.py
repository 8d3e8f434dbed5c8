"""Minimal static SVG line charts (no plotting dependency)."""

from __future__ import annotations

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _decimate(x, ys, max_points):
    stride = max(1, int(np.ceil(len(x) / max_points)))
    idx = np.arange(0, len(x), stride)
    if idx[-1] != len(x) - 1:
        idx = np.append(idx, len(x) - 1)
    return x[idx], [y[idx] for y in ys]


def line_chart(
    path,
    x,
    series: dict,
    title: str = "",
    log: bool = False,
    colors: dict | None = None,
    width: int = 800,
    height: int = 320,
    max_points: int = 2000,
) -> None:
    """Write one polyline per entry of ``series`` (name -> y array)."""
    x = np.asarray(x, dtype=float)
    names = list(series)
    ys = [np.asarray(series[k], dtype=float) for k in names]
    x, ys = _decimate(x, ys, max_points)
    if log:
        ys = [np.log10(np.maximum(np.abs(y), 1e-16)) for y in ys]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.array([0.0])
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    ml, mr, mt, mb = 60, 20, 30, 40
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = float(x[0]), float(x[-1]) if x[-1] > x[0] else float(x[0]) + 1.0

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + (hi - v) / (hi - lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        v = lo + frac * (hi - lo)
        label = f"1e{v:.1f}" if log else f"{v:.3g}"
        out.append(f'<text x="{ml - 4}" y="{py(v) + 4:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{label}</text>')
        t = x0 + frac * (x1 - x0)
        out.append(f'<text x="{px(t):.1f}" y="{height - 22}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{t:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="11">t</text>')
    for k, (name, y) in enumerate(zip(names, ys)):
        color = (colors or {}).get(name, PALETTE[k % len(PALETTE)])
        ok = np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
    if len(names) <= 8:
        for k, name in enumerate(names):
            color = (colors or {}).get(name, PALETTE[k % len(PALETTE)])
            yy = mt + 14 + 14 * k
            out.append(f'<text x="{ml + pw - 6}" y="{yy}" text-anchor="end" fill="{color}" '
                       f'font-family="sans-serif" font-size="11">{name}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
