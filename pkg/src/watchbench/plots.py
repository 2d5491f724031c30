"""Minimal static SVG charts with byte-deterministic output.

The reporting commands emit vector plots; using a tiny built-in renderer
(instead of a plotting library) keeps the bytes identical across runs and
machines for the same inputs. The renderer identifies itself in an SVG
comment so outputs carry their provenance.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

RENDERER_ID = "watchbench-svg/1"

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 24, 46, 54
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

Series = tuple[str, Sequence[float], Sequence[float]]  # label, xs, ys


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


class _Svg:
    def __init__(self, title: str):
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}"'
            f' viewBox="0 0 {WIDTH} {HEIGHT}">',
            f"<!-- renderer: {RENDERER_ID} -->",
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle"'
            f' font-family="sans-serif" font-size="15" font-weight="bold">{_esc(title)}</text>',
        ]

    def add(self, fragment: str) -> None:
        self.parts.append(fragment)

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Axes:
    """Maps data coordinates onto the fixed plot rectangle."""

    def __init__(self, x_range: tuple[float, float], y_range: tuple[float, float]):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x: float) -> float:
        frac = (x - self.x0) / (self.x1 - self.x0)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y0) / (self.y1 - self.y0)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)

    def frame(self, svg: _Svg, xlabel: str, ylabel: str) -> None:
        left, right = MARGIN_L, WIDTH - MARGIN_R
        top, bottom = MARGIN_T, HEIGHT - MARGIN_B
        svg.add(
            f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}"'
            ' fill="none" stroke="#333333" stroke-width="1"/>'
        )
        for tx in _ticks(self.x0, self.x1):
            px = self.px(tx)
            svg.add(
                f'<line x1="{_fmt(px)}" y1="{bottom}" x2="{_fmt(px)}" y2="{bottom + 5}"'
                ' stroke="#333333" stroke-width="1"/>'
            )
            svg.add(
                f'<text x="{_fmt(px)}" y="{bottom + 18}" text-anchor="middle"'
                f' font-family="sans-serif" font-size="11">{tx:.3g}</text>'
            )
        for ty in _ticks(self.y0, self.y1):
            py = self.py(ty)
            svg.add(
                f'<line x1="{left - 5}" y1="{_fmt(py)}" x2="{left}" y2="{_fmt(py)}"'
                ' stroke="#333333" stroke-width="1"/>'
            )
            svg.add(
                f'<text x="{left - 8}" y="{_fmt(py + 4)}" text-anchor="end"'
                f' font-family="sans-serif" font-size="11">{ty:.3g}</text>'
            )
        svg.add(
            f'<text x="{(left + right) / 2:.0f}" y="{HEIGHT - 14}" text-anchor="middle"'
            f' font-family="sans-serif" font-size="12">{_esc(xlabel)}</text>'
        )
        svg.add(
            f'<text x="18" y="{(top + bottom) / 2:.0f}" text-anchor="middle"'
            f' font-family="sans-serif" font-size="12"'
            f' transform="rotate(-90 18 {(top + bottom) / 2:.0f})">{_esc(ylabel)}</text>'
        )

    def polyline(self, svg: _Svg, xs: Sequence[float], ys: Sequence[float], color: str) -> None:
        run: list[str] = []
        for x, y in zip(xs, ys):
            if math.isnan(x) or math.isnan(y):
                self._flush_run(svg, run, color)
                run = []
                continue
            run.append(f"{_fmt(self.px(x))},{_fmt(self.py(y))}")
        self._flush_run(svg, run, color)

    def _flush_run(self, svg: _Svg, run: list[str], color: str) -> None:
        if len(run) >= 2:
            svg.add(
                f'<polyline points="{" ".join(run)}" fill="none" stroke="{color}"'
                ' stroke-width="2"/>'
            )
        elif len(run) == 1:
            x, y = run[0].split(",")
            svg.add(f'<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>')


def _legend(svg: _Svg, labels: Sequence[str]) -> None:
    x = MARGIN_L + 10
    y = MARGIN_T + 16
    for i, label in enumerate(labels):
        color = PALETTE[i % len(PALETTE)]
        svg.add(
            f'<line x1="{x}" y1="{y + i * 16 - 4}" x2="{x + 18}" y2="{y + i * 16 - 4}"'
            f' stroke="{color}" stroke-width="2"/>'
        )
        svg.add(
            f'<text x="{x + 24}" y="{y + i * 16}" font-family="sans-serif"'
            f' font-size="11">{_esc(label)}</text>'
        )


def _finite(values: Sequence[float]) -> list[float]:
    return [v for v in values if not math.isnan(v)]


def _span(all_vals: list[float], pad: float = 0.03) -> tuple[float, float]:
    if not all_vals:
        return (0.0, 1.0)
    lo, hi = min(all_vals), max(all_vals)
    if hi == lo:
        return (lo - 0.5, hi + 0.5)
    margin = (hi - lo) * pad
    return (lo - margin, hi + margin)


def line_chart(
    path: str | Path,
    title: str,
    xlabel: str,
    ylabel: str,
    series: Sequence[Series],
    x_range: tuple[float, float] | None = None,
    y_range: tuple[float, float] | None = None,
) -> None:
    """Overlaid line plot; NaN gaps break the line."""
    xs_all = [v for _, xs, _ in series for v in _finite(xs)]
    ys_all = [v for _, _, ys in series for v in _finite(ys)]
    axes = _Axes(x_range or _span(xs_all), y_range or _span(ys_all))
    svg = _Svg(title)
    axes.frame(svg, xlabel, ylabel)
    for i, (_, xs, ys) in enumerate(series):
        axes.polyline(svg, xs, ys, PALETTE[i % len(PALETTE)])
    _legend(svg, [label for label, _, _ in series])
    Path(path).write_text(svg.render(), encoding="utf-8")


def reliability_chart(
    path: str | Path,
    title: str,
    counts: Sequence[int],
    mean_confidence: Sequence[float],
    accuracy: Sequence[float],
) -> None:
    """Reliability diagram: accuracy bars per confidence bin against the identity line."""
    n_bins = len(counts)
    axes = _Axes((0.0, 1.0), (0.0, 1.0))
    svg = _Svg(title)
    axes.frame(svg, "confidence", "accuracy")
    for b in range(n_bins):
        if counts[b] == 0:
            continue
        lo_edge, hi_edge = b / n_bins, (b + 1) / n_bins
        x_left = axes.px(lo_edge + 0.004)
        x_right = axes.px(hi_edge - 0.004)
        y_top = axes.py(accuracy[b])
        y_base = axes.py(0.0)
        svg.add(
            f'<rect x="{_fmt(x_left)}" y="{_fmt(y_top)}" width="{_fmt(x_right - x_left)}"'
            f' height="{_fmt(y_base - y_top)}" fill="#1f77b4" fill-opacity="0.75"/>'
        )
        svg.add(
            f'<text x="{_fmt((x_left + x_right) / 2)}" y="{_fmt(y_top - 4)}"'
            f' text-anchor="middle" font-family="sans-serif" font-size="9">n={counts[b]}</text>'
        )
    svg.add(
        f'<line x1="{_fmt(axes.px(0.0))}" y1="{_fmt(axes.py(0.0))}"'
        f' x2="{_fmt(axes.px(1.0))}" y2="{_fmt(axes.py(1.0))}"'
        ' stroke="#555555" stroke-width="1" stroke-dasharray="5,4"/>'
    )
    Path(path).write_text(svg.render(), encoding="utf-8")


def cdf_chart(
    path: str | Path,
    title: str,
    xlabel: str,
    series: Sequence[tuple[str, Sequence[float]]],
    tau: float | None = None,
) -> None:
    """Empirical CDFs of one or more samples, with an optional vertical threshold marker."""
    axes = _Axes((0.0, 1.0), (0.0, 1.0))
    svg = _Svg(title)
    axes.frame(svg, xlabel, "fraction <= x")
    for i, (_, values) in enumerate(series):
        xs = sorted(_finite(values))
        n = len(xs)
        if n == 0:
            continue
        px: list[float] = [0.0]
        py: list[float] = [0.0]
        for j, v in enumerate(xs):
            px.extend([v, v])
            py.extend([j / n, (j + 1) / n])
        px.append(1.0)
        py.append(1.0)
        axes.polyline(svg, px, py, PALETTE[i % len(PALETTE)])
    if tau is not None:
        x = axes.px(tau)
        svg.add(
            f'<line x1="{_fmt(x)}" y1="{MARGIN_T}" x2="{_fmt(x)}" y2="{HEIGHT - MARGIN_B}"'
            ' stroke="#333333" stroke-width="1" stroke-dasharray="3,3"/>'
        )
        svg.add(
            f'<text x="{_fmt(x + 4)}" y="{MARGIN_T + 12}" font-family="sans-serif"'
            f' font-size="10">tau={tau:g}</text>'
        )
    _legend(svg, [label for label, _ in series])
    Path(path).write_text(svg.render(), encoding="utf-8")
