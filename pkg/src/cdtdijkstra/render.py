"""Deterministic SVG output for dissections and planned paths."""
from __future__ import annotations

from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

from .dissection import ConvexDissection

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_svg(d: ConvexDissection, paths: Sequence = (), init=None, goals: Iterable = (),
               width: int = 800, labels: Optional[Sequence[str]] = None) -> str:
    """SVG 1.1 document: one ``<path>`` per convex polygon, cutlines as ``<line>``,
    planned paths as ``<polyline>``, start and goals as circles.

    Obstacles show through as the dark background.
    """
    x0, y0, x1, y1 = d.env.bbox
    w, h = (x1 - x0) or 1.0, (y1 - y0) or 1.0
    s = width / w
    height = max(1, round(h * s))

    def X(x):
        return _fmt((x - x0) * s)

    def Y(y):
        return _fmt((y1 - y) * s)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#444444"/>',
        '<g id="polygons" fill="#f4f1e8" stroke="#c8c2b0" stroke-width="0.5">',
    ]
    for p in d.polygons:
        pts = " L ".join(f"{X(v[0])} {Y(v[1])}" for v in p.vertices)
        out.append(f'<path id="p{p.id}" d="M {pts} Z"/>')
    out.append("</g>")
    out.append('<g id="cutlines" stroke="#7a9cc6" stroke-width="1">')
    for c in d.cutlines:
        a, b = c.endpoints
        out.append(f'<line id="c{c.id}" x1="{X(a[0])}" y1="{Y(a[1])}" x2="{X(b[0])}" y2="{Y(b[1])}"/>')
    out.append("</g>")
    if len(paths):
        out.append('<g id="paths" fill="none" stroke-width="2">')
        for i, path in enumerate(paths):
            pts = " ".join(f"{X(v[0])},{Y(v[1])}" for v in path)
            title = ""
            if labels is not None and i < len(labels):
                title = f"<title>{escape(labels[i])}</title>"
            out.append(f'<polyline stroke="{PALETTE[i % len(PALETTE)]}" points="{pts}">{title}</polyline>')
        out.append("</g>")
    marks = []
    if init is not None:
        marks.append(f'<circle class="init" cx="{X(init[0])}" cy="{Y(init[1])}" r="4" fill="#2ca02c"/>')
    for g in goals:
        marks.append(f'<circle class="goal" cx="{X(g[0])}" cy="{Y(g[1])}" r="4" fill="#d62728"/>')
    if marks:
        out.append('<g id="markers">')
        out.extend(marks)
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, svg: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)

