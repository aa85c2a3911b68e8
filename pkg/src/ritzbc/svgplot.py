"""Minimal standalone SVG charts (error bars over log-λ, line charts over iterations).

Output depends only on the input data, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

__all__ = ["Series", "errorbar_svg", "line_svg"]

WIDTH, HEIGHT = 720, 460
LEFT, RIGHT, TOP, BOTTOM = 80, 200, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    err: tuple[float, ...] | None = None


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Axes:
    def __init__(self, xs, ys, logx, logy):
        self.logx, self.logy = logx, logy
        tx = [self._tx(x) for x in xs]
        ty = [self._ty(y) for y in ys]
        self.x0, self.x1 = self._pad(min(tx), max(tx))
        self.y0, self.y1 = self._pad(min(ty), max(ty))

    @staticmethod
    def _pad(lo, hi):
        if hi - lo < 1e-12:
            return lo - 0.5, hi + 0.5
        span = hi - lo
        return lo - 0.05 * span, hi + 0.05 * span

    def _tx(self, x):
        return math.log10(x) if self.logx else x

    def _ty(self, y):
        return math.log10(y) if self.logy else y

    def px(self, x):
        w = WIDTH - LEFT - RIGHT
        return LEFT + (self._tx(x) - self.x0) / (self.x1 - self.x0) * w

    def py(self, y):
        h = HEIGHT - TOP - BOTTOM
        return TOP + h - (self._ty(y) - self.y0) / (self.y1 - self.y0) * h

    def ticks(self, log, lo, hi):
        if log:
            return [10.0**k for k in range(math.ceil(lo), math.floor(hi) + 1)]
        step = 10 ** math.floor(math.log10((hi - lo) / 4)) if hi > lo else 1.0
        start = math.ceil(lo / step) * step
        n = int((hi - start) / step) + 1
        return [start + k * step for k in range(n)][:12]


def _tick_label(v, log):
    if log:
        return f"1e{round(math.log10(v))}"
    return f"{v:g}"


def _frame(ax: _Axes, title, xlabel, ylabel):
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2 - RIGHT / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{WIDTH - LEFT - RIGHT}" height="{HEIGHT - TOP - BOTTOM}" '
        f'fill="none" stroke="black"/>',
    ]
    for v in ax.ticks(ax.logx, ax.x0, ax.x1):
        x = _fmt(ax.px(v))
        out.append(f'<line x1="{x}" y1="{HEIGHT - BOTTOM}" x2="{x}" y2="{HEIGHT - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{HEIGHT - BOTTOM + 18}" text-anchor="middle">{_tick_label(v, ax.logx)}</text>')
    for v in ax.ticks(ax.logy, ax.y0, ax.y1):
        y = _fmt(ax.py(v))
        out.append(f'<line x1="{LEFT - 5}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">'
                   f'{_tick_label(v, ax.logy)}</text>')
    out.append(f'<text x="{(LEFT + WIDTH - RIGHT) / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(TOP + HEIGHT - BOTTOM) / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(TOP + HEIGHT - BOTTOM) / 2:.2f})">{escape(ylabel)}</text>')
    return out


def _legend(series):
    out = []
    for k, s in enumerate(series):
        c = COLORS[k % len(COLORS)]
        y = TOP + 10 + 18 * k
        x = WIDTH - RIGHT + 15
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 20}" y2="{y}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{x + 26}" y="{y}" dominant-baseline="middle">{escape(s.label)}</text>')
    return out


def errorbar_svg(series: list[Series], title="", xlabel="λ", ylabel="relative error", logy=True) -> str:
    """Mean ± std error bars per series on a log-x axis."""
    if not series or not any(s.x for s in series):
        raise ValueError("nothing to plot")
    xs = [x for s in series for x in s.x]
    lows, highs = [], []
    for s in series:
        err = s.err or (0.0,) * len(s.y)
        lows += [y - e for y, e in zip(s.y, err)]
        highs += [y + e for y, e in zip(s.y, err)]
    logy = logy and min(s_y for s in series for s_y in s.y) > 0
    floor = min(y for s in series for y in s.y) / 10 if logy else None
    ys = [max(v, floor) if logy else v for v in lows + highs]
    ax = _Axes(xs, ys, logx=True, logy=logy)
    out = _frame(ax, title, xlabel, ylabel)
    for k, s in enumerate(series):
        c = COLORS[k % len(COLORS)]
        err = s.err or (0.0,) * len(s.y)
        out.append(f'<g class="series" data-label="{escape(s.label)}" stroke="{c}" fill="{c}">')
        pts = " ".join(f"{_fmt(ax.px(x))},{_fmt(ax.py(y))}" for x, y in zip(s.x, s.y))
        out.append(f'<polyline points="{pts}" fill="none" stroke-width="1.5"/>')
        for x, y, e in zip(s.x, s.y, err):
            lo = max(y - e, floor) if logy else y - e
            px = ax.px(x)
            out.append(
                f'<g class="errorbar"><line x1="{_fmt(px)}" y1="{_fmt(ax.py(lo))}" x2="{_fmt(px)}" '
                f'y2="{_fmt(ax.py(y + e))}"/><line x1="{_fmt(px - 4)}" y1="{_fmt(ax.py(y + e))}" '
                f'x2="{_fmt(px + 4)}" y2="{_fmt(ax.py(y + e))}"/><line x1="{_fmt(px - 4)}" '
                f'y1="{_fmt(ax.py(lo))}" x2="{_fmt(px + 4)}" y2="{_fmt(ax.py(lo))}"/>'
                f'<circle cx="{_fmt(px)}" cy="{_fmt(ax.py(y))}" r="3"/></g>'
            )
        out.append("</g>")
    out += _legend(series)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_svg(series: list[Series], title="", xlabel="iteration", ylabel="|loss - energy|", logy=True) -> str:
    if not series or not any(s.x for s in series):
        raise ValueError("nothing to plot")
    positive = [y for s in series for y in s.y if y > 0]
    logy = logy and bool(positive)
    floor = min(positive) if logy else None
    xs = [x for s in series for x in s.x]
    ys = [max(y, floor) if logy else y for s in series for y in s.y]
    ax = _Axes(xs, ys, logx=False, logy=logy)
    out = _frame(ax, title, xlabel, ylabel)
    for k, s in enumerate(series):
        c = COLORS[k % len(COLORS)]
        pts = " ".join(
            f"{_fmt(ax.px(x))},{_fmt(ax.py(max(y, floor) if logy else y))}" for x, y in zip(s.x, s.y)
        )
        out.append(f'<g class="series" data-label="{escape(s.label)}">'
                   f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1"/></g>')
    out += _legend(series)
    out.append("</svg>")
    return "\n".join(out) + "\n"
