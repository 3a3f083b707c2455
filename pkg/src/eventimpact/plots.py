"""Static SVG charts of observed series against their counterfactual."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

_W, _H, _PAD = 720, 220, 44


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Panel:
    def __init__(self, x0: float, y0: float, w: float, h: float, n: int, lo: float, hi: float):
        if hi <= lo:
            hi = lo + 1.0
        span = hi - lo
        self.lo, self.hi = lo - 0.05 * span, hi + 0.05 * span
        self.x0, self.y0, self.w, self.h, self.n = x0, y0, w, h, max(n, 2)

    def x(self, i) -> float:
        return self.x0 + self.w * i / (self.n - 1)

    def y(self, v) -> float:
        return self.y0 + self.h * (self.hi - v) / (self.hi - self.lo)

    def line(self, values, color: str, dash: str = "") -> str:
        pts, out = [], []
        for i, v in enumerate(values):
            if np.isfinite(v):
                pts.append(f"{_fmt(self.x(i))},{_fmt(self.y(v))}")
            elif pts:
                out.append(pts)
                pts = []
        if pts:
            out.append(pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return "".join(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{extra} points="{" ".join(p)}"/>'
            for p in out if len(p) > 1
        )

    def band(self, low, high, color: str) -> str:
        idx = [i for i in range(len(low)) if np.isfinite(low[i]) and np.isfinite(high[i])]
        if len(idx) < 2:
            return ""
        top = [f"{_fmt(self.x(i))},{_fmt(self.y(high[i]))}" for i in idx]
        bot = [f"{_fmt(self.x(i))},{_fmt(self.y(low[i]))}" for i in reversed(idx)]
        return f'<polygon fill="{color}" fill-opacity="0.25" stroke="none" points="{" ".join(top + bot)}"/>'

    def frame(self, title: str, zero: bool = False) -> str:
        parts = [
            f'<rect x="{_fmt(self.x0)}" y="{_fmt(self.y0)}" width="{_fmt(self.w)}" height="{_fmt(self.h)}" '
            'fill="none" stroke="#999"/>',
            f'<text x="{_fmt(self.x0)}" y="{_fmt(self.y0 - 6)}" font-size="12">{escape(title)}</text>',
            f'<text x="{_fmt(self.x0 - 4)}" y="{_fmt(self.y0 + 10)}" font-size="10" text-anchor="end">'
            f"{self.hi:.4g}</text>",
            f'<text x="{_fmt(self.x0 - 4)}" y="{_fmt(self.y0 + self.h)}" font-size="10" text-anchor="end">'
            f"{self.lo:.4g}</text>",
        ]
        if zero and self.lo < 0 < self.hi:
            parts.append(f'<line x1="{_fmt(self.x0)}" x2="{_fmt(self.x0 + self.w)}" y1="{_fmt(self.y(0))}" '
                         f'y2="{_fmt(self.y(0))}" stroke="#666" stroke-dasharray="2,2"/>')
        return "".join(parts)

    def vline(self, i: float) -> str:
        x = _fmt(self.x(i))
        return f'<line x1="{x}" x2="{x}" y1="{_fmt(self.y0)}" y2="{_fmt(self.y0 + self.h)}" stroke="#c00"/>'


def _range(*arrays) -> tuple[float, float]:
    vals = np.concatenate([np.asarray(a, float).ravel() for a in arrays])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    return float(vals.min()), float(vals.max())


def _svg(body: str, height: int) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" '
            f'viewBox="0 0 {_W} {height}">{body}</svg>\n')


def impact_svg(dates: Sequence[str], observed, mean, low, high, event_index: int, title: str = "") -> str:
    """Observed series (solid) against the counterfactual mean (dashed) with its band."""
    observed, mean, low, high = (np.asarray(a, float) for a in (observed, mean, low, high))
    p = _Panel(_PAD + 20, 30, _W - 2 * _PAD - 20, _H - 60, len(observed), *_range(observed, mean, low, high))
    body = [p.frame(title), p.band(low, high, "#4a7ab5"), p.line(mean, "#1f4e8c", "5,3"),
            p.line(observed, "#222"), p.vline(event_index)]
    body.append(f'<text x="{_fmt(p.x0)}" y="{_H - 10}" font-size="10">{escape(dates[0])}</text>')
    body.append(f'<text x="{_fmt(p.x0 + p.w)}" y="{_H - 10}" font-size="10" text-anchor="end">'
                f"{escape(dates[-1])}</text>")
    return _svg("".join(body), _H)


def three_panel_svg(dates: Sequence[str], observed, mean, low, high, event_index: int, title: str = "") -> str:
    """Observed vs counterfactual, pointwise difference, and cumulative difference.

    The cumulative panel starts at the event; the band there is the running
    sum of the pointwise band, a conservative envelope.
    """
    observed, mean, low, high = (np.asarray(a, float) for a in (observed, mean, low, high))
    n = len(observed)
    diff, dlo, dhi = observed - mean, observed - high, observed - low
    cum, clo, chi = (np.full(n, np.nan) for _ in range(3))
    post = slice(event_index, n)
    cum[post] = np.cumsum(np.nan_to_num(diff[post]))
    clo[post] = np.cumsum(np.nan_to_num(dlo[post]))
    chi[post] = np.cumsum(np.nan_to_num(dhi[post]))

    h = _H - 40
    body = []
    panels = [
        ("observed vs counterfactual", (observed, mean, low, high), False),
        ("pointwise difference", (diff, dlo, dhi), True),
        ("cumulative difference", (cum, clo, chi), True),
    ]
    for k, (name, arrays, zero) in enumerate(panels):
        p = _Panel(_PAD + 20, 30 + k * (h + 30), _W - 2 * _PAD - 20, h, n, *_range(*arrays))
        label = f"{title}: {name}" if title and k == 0 else name
        body.append(p.frame(label, zero))
        if k == 0:
            body += [p.band(low, high, "#4a7ab5"), p.line(mean, "#1f4e8c", "5,3"), p.line(observed, "#222")]
        else:
            body += [p.band(arrays[1], arrays[2], "#4a7ab5"), p.line(arrays[0], "#1f4e8c")]
        body.append(p.vline(event_index))
    total = 30 + 3 * (h + 30)
    body.append(f'<text x="{_PAD + 20}" y="{total - 8}" font-size="10">{escape(dates[0])}</text>')
    body.append(f'<text x="{_W - _PAD}" y="{total - 8}" font-size="10" text-anchor="end">{escape(dates[-1])}</text>')
    return _svg("".join(body), total)


def effects_svg(labels: Sequence[str], means, lows, highs, title: str = "") -> str:
    """Horizontal interval plot of aggregate effects (already compressed if wanted)."""
    n = len(labels)
    height = 50 + 22 * max(n, 1)
    lo, hi = _range(means, lows, highs, [0.0])
    left, right = 220, _W - 30
    scale = (right - left) / (hi - lo if hi > lo else 1.0)
    X = lambda v: left + (v - lo) * scale  # noqa: E731
    body = [f'<text x="10" y="18" font-size="12">{escape(title)}</text>',
            f'<line x1="{_fmt(X(0))}" x2="{_fmt(X(0))}" y1="28" y2="{height - 10}" stroke="#666" '
            'stroke-dasharray="2,2"/>']
    for i, (lab, m, a, b) in enumerate(zip(labels, means, lows, highs)):
        y = 40 + 22 * i
        body.append(f'<text x="{left - 8}" y="{y + 4}" font-size="11" text-anchor="end">{escape(lab)}</text>')
        body.append(f'<line x1="{_fmt(X(a))}" x2="{_fmt(X(b))}" y1="{y}" y2="{y}" stroke="#1f4e8c" stroke-width="2"/>')
        body.append(f'<circle cx="{_fmt(X(m))}" cy="{y}" r="4" fill="#1f4e8c"/>')
    return _svg("".join(body), height)
