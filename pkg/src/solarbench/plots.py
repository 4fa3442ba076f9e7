"""Curve CSVs and dependency-free SVG line plots.

Every plotted point is also emitted as a ``<circle>`` carrying the exact
values in ``data-x`` / ``data-y`` attributes, so a plot can be checked
against the CSV it was drawn from.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from solarbench.sweep import LossLandscape, SweepResult

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 140, 40, 52


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "top1", "top5"])
    for a, t1, t5 in zip(result.alphas, result.top1_accuracy, result.top5_accuracy):
        w.writerow([repr(a), repr(t1), repr(t5)])
    return buf.getvalue()


def landscape_csv(landscapes: Sequence[LossLandscape]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample_id", "alpha", "loss"])
    for ls in landscapes:
        for a, loss in zip(ls.alphas, ls.losses):
            w.writerow([ls.sample_id, repr(a), repr(loss)])
    return buf.getvalue()


def _nice_range(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-12:
        pad = max(abs(hi) * 0.1, 0.5)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    *,
    title: str = "",
    xlabel: str = "alpha",
    ylabel: str = "",
    ylim: tuple[float, float] | None = None,
) -> str:
    """Render ``(label, xs, ys)`` series as an SVG 1.1 document."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x0, x1 = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = ylim if ylim else _nice_range(min(ys_all, default=0.0), max(ys_all, default=1.0))
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]

    # axes and ticks
    bottom, right = MARGIN_T + ph, MARGIN_L + pw
    out.append(
        f'<path d="M{MARGIN_L},{MARGIN_T} L{MARGIN_L},{bottom} L{right},{bottom}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        yv = y0 + (y1 - y0) * i / 5
        out.append(f'<line x1="{px(xv):.3f}" y1="{bottom}" x2="{px(xv):.3f}" y2="{bottom + 4}" stroke="black"/>')
        out.append(f'<text x="{px(xv):.3f}" y="{bottom + 16}" text-anchor="middle">{xv:.2f}</text>')
        out.append(f'<line x1="{MARGIN_L - 4}" y1="{py(yv):.3f}" x2="{MARGIN_L}" y2="{py(yv):.3f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{py(yv) + 4:.3f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.1f})">{escape(ylabel)}</text>'
    )

    for idx, (label, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        points = " ".join(f"{px(x):.3f},{py(y):.3f}" for x, y in zip(xs, ys))
        out.append(f'<g class="series" data-label={quoteattr(str(label))}>')
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        for x, y in zip(xs, ys):
            out.append(
                f'<circle cx="{px(x):.3f}" cy="{py(y):.3f}" r="1.2" fill="{color}" '
                f'data-x="{x!r}" data-y="{y!r}"/>'
            )
        out.append("</g>")
        ly = MARGIN_T + 14 + 16 * idx
        out.append(f'<line x1="{right + 10}" y1="{ly}" x2="{right + 28}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{right + 32}" y="{ly + 4}">{escape(str(label))}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def sweep_svg(result: SweepResult, title: str = "Universal solarization") -> str:
    return line_plot(
        [("top1", result.alphas, result.top1_accuracy), ("top5", result.alphas, result.top5_accuracy)],
        title=title,
        ylabel="accuracy",
    )


def landscape_svg(landscapes: Sequence[LossLandscape], title: str = "Loss landscape") -> str:
    return line_plot(
        [(ls.sample_id, ls.alphas, ls.losses) for ls in landscapes],
        title=title,
        ylabel="cross-entropy loss",
    )
