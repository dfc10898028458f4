"""Static SVG boxplots of propensity overlap, one panel per assigned category."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .propensity import OverlapSummary

PANEL_W = 260
PANEL_H = 220
MARGIN_L = 40
MARGIN_T = 30
MARGIN_B = 40
COLS = 5


def _f(v: float) -> str:
    return f"{v:.2f}"


def overlap_svg(summary: OverlapSummary, comment: str | None = None) -> str:
    assigned = list(dict.fromkeys(r.assigned for r in summary.rows))
    scored = list(summary.scheme)
    K = len(scored)
    ncol = min(COLS, len(assigned))
    nrow = -(-len(assigned) // ncol)
    width, height = ncol * PANEL_W, nrow * PANEL_H
    plot_h = PANEL_H - MARGIN_T - MARGIN_B
    plot_w = PANEL_W - MARGIN_L - 10
    slot = plot_w / K
    box_w = slot * 0.6

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if comment:
        out.append(f"<!-- {escape(comment)} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">')
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    for i, a in enumerate(assigned):
        ox = (i % ncol) * PANEL_W
        oy = (i // ncol) * PANEL_H
        x0, y0 = ox + MARGIN_L, oy + MARGIN_T

        def ypos(v: float) -> float:
            return y0 + plot_h * (1.0 - v)

        out.append(f'<g class="panel" data-assigned="{escape(a)}">')
        out.append(f'<text x="{_f(ox + PANEL_W / 2)}" y="{_f(oy + 18)}" text-anchor="middle" '
                   f'font-weight="bold">Assigned: {escape(a)}</text>')
        out.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(plot_w)}" height="{_f(plot_h)}" '
                   'fill="none" stroke="#888"/>')
        for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
            y = ypos(tick)
            out.append(f'<line x1="{_f(x0 - 4)}" y1="{_f(y)}" x2="{_f(x0)}" y2="{_f(y)}" stroke="#888"/>')
            out.append(f'<text x="{_f(x0 - 6)}" y="{_f(y + 3)}" text-anchor="end">{tick:g}</text>')
        for k, s in enumerate(scored):
            r = summary.get(a, s)
            cx = x0 + slot * (k + 0.5)
            fill = "#4c72b0" if s == a else "#c8d3e6"
            out.append(f'<g class="box" data-scored="{escape(s)}" data-median="{r.median!r}">')
            out.append(f'<line x1="{_f(cx)}" y1="{_f(ypos(r.max))}" x2="{_f(cx)}" y2="{_f(ypos(r.min))}" stroke="black"/>')
            out.append(f'<rect x="{_f(cx - box_w / 2)}" y="{_f(ypos(r.q3))}" width="{_f(box_w)}" '
                       f'height="{_f(ypos(r.q1) - ypos(r.q3))}" fill="{fill}" stroke="black"/>')
            out.append(f'<line x1="{_f(cx - box_w / 2)}" y1="{_f(ypos(r.median))}" x2="{_f(cx + box_w / 2)}" '
                       f'y2="{_f(ypos(r.median))}" stroke="black" stroke-width="2"/>')
            out.append(f'<text x="{_f(cx)}" y="{_f(y0 + plot_h + 14)}" text-anchor="middle">{escape(s)}</text>')
            out.append("</g>")
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
