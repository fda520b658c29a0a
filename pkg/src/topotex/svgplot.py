"""Dependency-free SVG figure emission.

All figures are plain SVG text: cheap to diff in tests and to regenerate
byte-identically. A generation-time comment is included unless the caller
asks for reproducible output. Bright-component features draw red,
hole features blue, matching the barcode/diagram/landscape conventions
used throughout.
"""

from __future__ import annotations

import base64
import io
from datetime import datetime, timezone

import numpy as np

from .cubical import Barcode
from .image_io import GrayImage
from .landscapes import LandscapeCurves

H0_COLOR = "red"
H1_COLOR = "blue"

CLASS_COLORS = {
    "flowers": "red",
    "sugar": "yellow",
    "gravel": "green",
    "fish": "blue",
}
_FALLBACK_COLORS = ["purple", "orange", "teal", "brown", "magenta", "gray"]


def class_color(label: str, fallback_index: int = 0) -> str:
    return CLASS_COLORS.get(label, _FALLBACK_COLORS[fallback_index % len(_FALLBACK_COLORS)])


def _document(width: int, height: int, body: list[str], reproducible: bool) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    ]
    if not reproducible:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        head.append(f"<!-- generated {stamp} -->")
    head.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _text(x: float, y: float, s: str, size: int = 11, anchor: str = "start") -> str:
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" '
            f'font-size="{size}" text-anchor="{anchor}">{s}</text>')


def _line(x1, y1, x2, y2, color="black", width=1.0, dash: str | None = None) -> str:
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"{d}/>')


# intensity axes run 255 -> 0 left to right: the cutoff sweeps downward
def _intensity_to_x(intensity: float, x0: float, plot_w: float) -> float:
    return x0 + (255.0 - intensity) / 255.0 * plot_w


def _intensity_axis(x0: float, y: float, plot_w: float) -> list[str]:
    parts = [_line(x0, y, x0 + plot_w, y)]
    for tick in (255, 200, 150, 100, 50, 0):
        tx = _intensity_to_x(tick, x0, plot_w)
        parts.append(_line(tx, y, tx, y + 4))
        parts.append(_text(tx, y + 16, str(tick), size=10, anchor="middle"))
    parts.append(_text(x0 + plot_w / 2, y + 30, "intensity cutoff", anchor="middle"))
    return parts


def barcode_svg(bc: Barcode, reproducible: bool = False) -> str:
    width, x0, plot_w = 640, 50, 560
    bars = sorted(bc.bars, key=lambda b: (b.dim, -(b.death_intensity is None),
                                          -b.birth_intensity))
    # thin the rows for busy barcodes so the figure stays readable
    row_h = max(0.8, min(8.0, 560.0 / max(len(bars), 1)))
    stroke = min(3.0, max(0.5, row_h * 0.6))
    plot_h = max(row_h * len(bars) + 20, 60)
    height = int(plot_h + 70)
    body = [_text(x0, 16, f"persistence barcode ({bc.width}x{bc.height}, "
                          f"{len(bars)} bars)")]
    y = 30.0
    for bar in bars:
        color = H0_COLOR if bar.dim == 0 else H1_COLOR
        bx = _intensity_to_x(bar.birth_intensity, x0, plot_w)
        if bar.death_intensity is None:
            dx = x0 + plot_w
            body.append(_line(bx, y, dx, y, color, stroke))
            body.append(_text(dx + 4, y + 3, "\u221e", size=10))
        else:
            dx = _intensity_to_x(bar.death_intensity, x0, plot_w)
            body.append(_line(bx, y, dx, y, color, stroke))
        y += row_h
    body += _intensity_axis(x0, plot_h + 25, plot_w)
    return _document(width, height, body, reproducible)


def diagram_svg(bc: Barcode, reproducible: bool = False) -> str:
    size, pad = 420, 50
    plot = size - 2 * pad

    def sx(v: float) -> float:
        return pad + v / 255.0 * plot

    def sy(v: float) -> float:
        return size - pad - v / 255.0 * plot

    body = [_text(pad, 20, f"persistence diagram ({bc.width}x{bc.height})")]
    body.append(_line(pad, size - pad, size - pad, size - pad))
    body.append(_line(pad, pad, pad, size - pad))
    body.append(_line(sx(0), sy(0), sx(255), sy(255), "gray", 0.7, dash="4,3"))
    inf_y = sy(0) + 18
    body.append(_line(pad, inf_y, size - pad, inf_y, "gray", 0.7, dash="2,3"))
    body.append(_text(size - pad + 6, inf_y + 4, "\u221e", size=12))
    for bar in bc.bars:
        color = H0_COLOR if bar.dim == 0 else H1_COLOR
        px = sx(bar.birth_intensity)
        py = inf_y if bar.death_intensity is None else sy(bar.death_intensity)
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color}" '
                    f'fill-opacity="0.75"/>')
    body.append(_text(size / 2, size - 12, "birth intensity", anchor="middle"))
    body.append(f'<text x="14" y="{size / 2:.0f}" font-family="sans-serif" font-size="11" '
                f'transform="rotate(-90 14 {size / 2:.0f})" '
                f'text-anchor="middle">death intensity</text>')
    return _document(size, size, body, reproducible)


def landscape_svg(curves: LandscapeCurves, title: str = "",
                  reproducible: bool = False) -> str:
    width, height = 640, 300
    x0, y_base, plot_w, plot_h = 50, 240, 560, 190
    all_vals = np.concatenate([curves.h0.ravel(), curves.h1.ravel()])
    vmax = max(float(all_vals.max()), 1.0)
    vmin = min(float(all_vals.min()), 0.0)
    span = vmax - vmin

    ts = curves.grid.points()
    # landscapes live over the internal parameter; label the axis in the
    # intensity units the parameter mirrors (255 - t)
    xs = x0 + (ts - curves.grid.t_min) / (curves.grid.t_max - curves.grid.t_min) * plot_w

    def sy(v: float) -> float:
        return y_base - (v - vmin) / span * plot_h

    dash = "6,4" if curves.virtual else None
    body = [_text(x0, 16, title or ("virtual landscape" if curves.virtual else "landscape"))]
    body.append(_line(x0, sy(0.0), x0 + plot_w, sy(0.0), "gray", 0.6))
    for block, color in ((curves.h0, H0_COLOR), (curves.h1, H1_COLOR)):
        for level, row in enumerate(block):
            pts = " ".join(f"{x:.2f},{sy(v):.2f}" for x, v in zip(xs, row))
            extra = f' stroke-dasharray="{dash}"' if dash else ""
            opacity = 1.0 - 0.14 * level
            body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                        f'stroke-width="1.4" stroke-opacity="{opacity:.2f}"{extra}/>')
    for tick in (255, 200, 150, 100, 50, 0):
        tx = x0 + (255.0 - tick) / 255.0 * plot_w
        body.append(_line(tx, y_base + 6, tx, y_base + 10))
        body.append(_text(tx, y_base + 22, str(tick), size=10, anchor="middle"))
    body.append(_text(x0 + plot_w / 2, y_base + 38, "intensity cutoff", anchor="middle"))
    body.append(_text(x0, 30, f"max {vmax:.1f}", size=10))
    return _document(width, height, body, reproducible)


_VIEWS = {"pc1-pc2": (0, 1), "pc1-pc3": (0, 2), "pc2-pc3": (1, 2)}


def _plane_polygon(w: np.ndarray, b: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vertices of {x : w.x = b} clipped to the box [lo, hi], in fan order."""
    pts = []
    axes = range(3)
    for free in axes:
        others = [a for a in axes if a != free]
        for c0 in (lo[others[0]], hi[others[0]]):
            for c1 in (lo[others[1]], hi[others[1]]):
                if w[free] == 0:
                    continue
                x = np.zeros(3)
                x[others[0]], x[others[1]] = c0, c1
                x[free] = (b - w[others[0]] * c0 - w[others[1]] * c1) / w[free]
                if lo[free] - 1e-9 <= x[free] <= hi[free] + 1e-9:
                    pts.append(x)
    if not pts:
        return np.empty((0, 3))
    pts = np.unique(np.round(np.array(pts), 9), axis=0)
    center = pts.mean(axis=0)
    u = pts[0] - center
    u_norm = np.linalg.norm(u)
    if u_norm == 0:
        return pts
    u /= u_norm
    v = np.cross(w / np.linalg.norm(w), u)
    ang = np.arctan2((pts - center) @ v, (pts - center) @ u)
    return pts[np.argsort(ang)]


def scatter3d_svg(points: np.ndarray, labels, w: np.ndarray, b: float,
                  view: str = "pc1-pc2", reproducible: bool = False,
                  title: str = "") -> str:
    if view not in _VIEWS:
        raise ValueError(f"view must be one of {sorted(_VIEWS)}")
    ax, ay = _VIEWS[view]
    points = np.asarray(points, dtype=float)
    size, pad = 480, 50
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    margin = 0.05 * np.maximum(hi - lo, 1e-9)
    lo, hi = lo - margin, hi + margin

    def sx(v: float) -> float:
        return pad + (v - lo[ax]) / (hi[ax] - lo[ax]) * (size - 2 * pad)

    def sy(v: float) -> float:
        return size - pad - (v - lo[ay]) / (hi[ay] - lo[ay]) * (size - 2 * pad)

    body = [_text(pad, 20, title or f"projected embeddings ({view})")]
    poly = _plane_polygon(np.asarray(w, dtype=float), float(b), lo, hi)
    if poly.shape[0] >= 3:
        center = poly.mean(axis=0)
        ring = list(poly) + [poly[0]]
        for p, q in zip(ring[:-1], ring[1:]):
            body.append(_line(sx(p[ax]), sy(p[ay]), sx(q[ax]), sy(q[ay]),
                              "dimgray", 0.8))
        for p in poly:
            body.append(_line(sx(center[ax]), sy(center[ay]), sx(p[ax]), sy(p[ay]),
                              "dimgray", 0.5, dash="3,3"))
    seen: dict[str, str] = {}
    for pt, label in zip(points, labels):
        if label not in seen:
            seen[label] = class_color(label, len(seen))
        color = seen[label]
        body.append(f'<circle cx="{sx(pt[ax]):.2f}" cy="{sy(pt[ay]):.2f}" r="3" '
                    f'fill="{color}" fill-opacity="0.8" stroke="gray" stroke-width="0.4"/>')
    ly = 36
    for label, color in seen.items():
        body.append(f'<circle cx="{size - 110}" cy="{ly}" r="4" fill="{color}" '
                    f'stroke="gray" stroke-width="0.4"/>')
        body.append(_text(size - 100, ly + 4, label, size=11))
        ly += 16
    body.append(_text(size / 2, size - 14, f"component {ax + 1}", anchor="middle"))
    body.append(f'<text x="16" y="{size / 2}" font-family="sans-serif" font-size="11" '
                f'transform="rotate(-90 16 {size / 2})" '
                f'text-anchor="middle">component {ay + 1}</text>')
    return _document(size, size, body, reproducible)


def image_panel_svg(img: GrayImage, title: str = "", reproducible: bool = False,
                    max_side: int = 480) -> str:
    from PIL import Image as PILImage

    buf = io.BytesIO()
    PILImage.fromarray(img.pixels).save(buf, format="PNG")
    payload = base64.b64encode(buf.getvalue()).decode("ascii")
    scale = min(1.0, max_side / max(img.width, img.height))
    w = max(1, round(img.width * scale))
    h = max(1, round(img.height * scale))
    body = [
        _text(10, 18, title or "annotation"),
        f'<image x="10" y="28" width="{w}" height="{h}" '
        f'image-rendering="pixelated" '
        f'xlink:href="data:image/png;base64,{payload}"/>',
    ]
    return _document(w + 20, h + 40, body, reproducible)
