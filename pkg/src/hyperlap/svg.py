"""Minimal static SVG emitter: axes, points, one fitted line.

No external plotting dependency; output is deterministic (no timestamps
unless explicitly requested in the comment argument).
"""

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = 60


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def scatter_with_fit(path, xs, ys, fit=None, title="", xlabel="", ylabel="",
                     loglog=True, comment=None):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    if loglog:
        keep &= (xs > 0) & (ys > 0)
    xs, ys = xs[keep], ys[keep]
    if xs.size == 0:
        raise ValueError("nothing to plot")
    tx = np.log10(xs) if loglog else xs
    ty = np.log10(ys) if loglog else ys
    x0, x1 = float(tx.min()), float(tx.max())
    y0, y1 = float(ty.min()), float(ty.max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 1, y1 + 1
    padx = 0.05 * (x1 - x0)
    pady = 0.08 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady

    def px(v):
        return MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
             f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">']
    if comment:
        parts.append(f"<!-- {comment} -->")
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    parts.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
                 f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>')
    for v in _ticks(x0 + padx, x1 - padx):
        parts.append(f'<line x1="{px(v):.1f}" y1="{HEIGHT - MARGIN}" '
                     f'x2="{px(v):.1f}" y2="{HEIGHT - MARGIN + 6}" stroke="black"/>')
        lab = f"1e{v:.2f}" if loglog else f"{v:.3g}"
        parts.append(f'<text x="{px(v):.1f}" y="{HEIGHT - MARGIN + 20}" '
                     f'font-size="11" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0 + pady, y1 - pady):
        parts.append(f'<line x1="{MARGIN - 6}" y1="{py(v):.1f}" x2="{MARGIN}" '
                     f'y2="{py(v):.1f}" stroke="black"/>')
        lab = f"1e{v:.2f}" if loglog else f"{v:.3g}"
        parts.append(f'<text x="{MARGIN - 10}" y="{py(v):.1f}" font-size="11" '
                     f'text-anchor="end" dominant-baseline="middle">{lab}</text>')
    for xv, yv in zip(tx, ty):
        parts.append(f'<circle cx="{px(xv):.1f}" cy="{py(yv):.1f}" r="3.5" '
                     'fill="steelblue"/>')
    if fit is not None:
        # fit carries exponent/intercept in natural log; draw in plot space
        ln10 = np.log(10.0)
        fy0 = (fit.exponent * (x0 * ln10) + fit.intercept) / ln10 if loglog else None
        fy1 = (fit.exponent * (x1 * ln10) + fit.intercept) / ln10 if loglog else None
        if loglog:
            parts.append(f'<line x1="{px(x0):.1f}" y1="{py(fy0):.1f}" '
                         f'x2="{px(x1):.1f}" y2="{py(fy1):.1f}" '
                         'stroke="firebrick" stroke-width="1.5"/>')
            parts.append(f'<text x="{WIDTH - MARGIN - 8}" y="{MARGIN + 16}" '
                         f'font-size="12" text-anchor="end">slope '
                         f'{fit.exponent:.3f}, R2 {fit.r2:.3f}</text>')
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="{MARGIN - 18}" font-size="14" '
                     f'text-anchor="middle">{title}</text>')
    if xlabel:
        parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="12" '
                     f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="16" y="{HEIGHT / 2}" font-size="12" '
                     f'text-anchor="middle" transform="rotate(-90 16 {HEIGHT / 2})">'
                     f'{ylabel}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
