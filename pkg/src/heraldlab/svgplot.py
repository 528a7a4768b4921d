"""First-party deterministic SVG rendering of the scenario datasets.

No external charting dependency: plots must be byte-reproducible, and the
styling needs are small (line plots with the dashed/dotted/dash-dotted
detector convention, a dual-axis trade-off plot, a ratio heatmap, and a
histogram with a fit overlay). All floats are written with one fixed format,
so identical datasets yield identical documents.
"""

from __future__ import annotations

import math

from .errors import SchemaError

WIDTH = 800
HEIGHT = 520
MARGIN_L = 78
MARGIN_R = 78
MARGIN_T = 46
MARGIN_B = 64

# line-style convention: dashed click, dotted pseudo-PNR, dash-dotted PNR
DETECTOR_DASH = {"click": "9 5", "ppnr": "2 4", "pnr": "9 4 2 4"}
SERIES_COLORS = ["#1f5fa6", "#c23b22", "#2e7d32", "#7b1fa2", "#e09c00",
                 "#00838f", "#5d4037", "#455a64"]
INF_COLOR = "#7f1d1d"


def _fmt(value: float) -> str:
    if isinstance(value, float) and value != value:  # NaN
        return "0"
    return f"{value:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 1.0
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / target))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if span / (step * mult) <= target:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * span:
        ticks.append(round(t / step) * step)
        t += step
    return ticks


class _Axis:
    def __init__(self, lo: float, hi: float, pix_lo: float, pix_hi: float):
        if hi <= lo:
            pad = abs(lo) if lo != 0 else 1.0
            lo, hi = lo - 0.05 * pad, hi + 0.05 * pad + 1e-12
        self.lo, self.hi = lo, hi
        self.pix_lo, self.pix_hi = pix_lo, pix_hi

    def __call__(self, value: float) -> float:
        frac = (value - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)


class _Canvas:
    def __init__(self, title: str):
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{WIDTH / 2:.6g}" y="26" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{_esc(title)}</text>',
        ]

    def line(self, x1, y1, x2, y2, stroke="#333333", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{_fmt(width)}"{d}/>'
        )

    def polyline(self, points, stroke, width=1.6, dash=None):
        if not points:
            return
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" '
            f'stroke-width="{_fmt(width)}"{d}/>'
        )

    def circle(self, x, y, r, fill):
        self.parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{fill}"/>')

    def rect(self, x, y, w, h, fill, stroke="none"):
        self.parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def text(self, x, y, content, size=12, anchor="middle", rotate=None, color="#222222"):
        transform = f' transform="rotate({rotate} {_fmt(x)} {_fmt(y)})"' if rotate else ""
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size}" fill="{color}"{transform}>'
            f"{_esc(content)}</text>"
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def _frame(canvas: _Canvas, x_axis: _Axis, y_axis: _Axis, x_label: str, y_label: str,
           y2_axis: _Axis | None = None, y2_label: str = ""):
    left, right = MARGIN_L, WIDTH - MARGIN_R
    top, bottom = MARGIN_T, HEIGHT - MARGIN_B
    canvas.line(left, bottom, right, bottom)
    canvas.line(left, bottom, left, top)
    for tick in _nice_ticks(x_axis.lo, x_axis.hi):
        px = x_axis(tick)
        canvas.line(px, bottom, px, bottom + 5)
        canvas.text(px, bottom + 20, _fmt(tick), size=11)
    for tick in _nice_ticks(y_axis.lo, y_axis.hi):
        py = y_axis(tick)
        canvas.line(left - 5, py, left, py)
        canvas.text(left - 9, py + 4, _fmt(tick), size=11, anchor="end")
    canvas.text((left + right) / 2, HEIGHT - 18, x_label, size=13)
    canvas.text(22, (top + bottom) / 2, y_label, size=13, rotate=-90)
    if y2_axis is not None:
        canvas.line(right, bottom, right, top)
        for tick in _nice_ticks(y2_axis.lo, y2_axis.hi):
            py = y2_axis(tick)
            canvas.line(right, py, right + 5, py)
            canvas.text(right + 9, py + 4, _fmt(tick), size=11, anchor="start")
        canvas.text(WIDTH - 18, (top + bottom) / 2, y2_label, size=13, rotate=90)


def _require(dataset: dict, columns: list[str]):
    missing = [c for c in columns if c not in dataset]
    if missing:
        raise SchemaError(f"dataset lacks required columns {missing}; has {sorted(dataset)}")


def _is_empty(dataset: dict) -> bool:
    return not dataset or all(len(v) == 0 for v in dataset.values())


def _no_data(title: str, x_label: str = "", y_label: str = "") -> str:
    canvas = _Canvas(title)
    x_axis = _Axis(0.0, 1.0, MARGIN_L, WIDTH - MARGIN_R)
    y_axis = _Axis(0.0, 1.0, HEIGHT - MARGIN_B, MARGIN_T)
    _frame(canvas, x_axis, y_axis, x_label, y_label)
    canvas.text(WIDTH / 2, HEIGHT / 2, "no data", size=18, color="#888888")
    return canvas.render()


def _floats(dataset: dict, column: str) -> list[float]:
    out = []
    for v in dataset[column]:
        try:
            out.append(float(v))
        except (TypeError, ValueError):
            out.append(math.nan)
    return out


def _axes(canvas, xs, ys, x_label, y_label, y2s=None, y2_label=""):
    finite_x = [v for v in xs if math.isfinite(v)] or [0.0, 1.0]
    finite_y = [v for v in ys if math.isfinite(v)] or [0.0, 1.0]
    pad = 0.05 * (max(finite_y) - min(finite_y) or 1.0)
    x_axis = _Axis(min(finite_x), max(finite_x), MARGIN_L, WIDTH - MARGIN_R)
    y_axis = _Axis(min(min(finite_y) - pad, 0.0) if min(finite_y) >= 0 else min(finite_y) - pad,
                   max(finite_y) + pad, HEIGHT - MARGIN_B, MARGIN_T)
    y2_axis = None
    if y2s is not None:
        finite2 = [v for v in y2s if math.isfinite(v)] or [0.0, 1.0]
        pad2 = 0.05 * (max(finite2) - min(finite2) or 1.0)
        y2_axis = _Axis(min(finite2) - pad2, max(finite2) + pad2, HEIGHT - MARGIN_B, MARGIN_T)
    _frame(canvas, x_axis, y_axis, x_label, y_label, y2_axis, y2_label)
    return x_axis, y_axis, y2_axis


def _series_keys(dataset: dict, columns: list[str]) -> list[tuple]:
    seen: list[tuple] = []
    n = len(next(iter(dataset.values())))
    for i in range(n):
        key = tuple(str(dataset[c][i]) for c in columns)
        if key not in seen:
            seen.append(key)
    return seen


def _render_model_curves(dataset: dict) -> str:
    _require(dataset, ["detector", "eta_herald", "herald_probability", "g2"])
    canvas = _Canvas("Heralded g2(0) vs herald probability (model curves)")
    xs = _floats(dataset, "herald_probability")
    ys = _floats(dataset, "g2")
    x_axis, y_axis, _ = _axes(canvas, xs, ys, "herald probability", "g2(0)")
    keys = _series_keys(dataset, ["detector", "eta_herald"])
    for idx, (detector, eta) in enumerate(keys):
        points = [
            (x_axis(xs[i]), y_axis(ys[i]))
            for i in range(len(xs))
            if str(dataset["detector"][i]) == detector
            and str(dataset["eta_herald"][i]) == eta
            and math.isfinite(xs[i]) and math.isfinite(ys[i])
        ]
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        canvas.polyline(points, color, dash=DETECTOR_DASH.get(detector))
        canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 16 + 15 * idx,
                    f"{detector} eta={eta}", size=11, anchor="end", color=color)
    return canvas.render()


def _render_mc_points(dataset: dict) -> str:
    _require(dataset, ["eta_herald", "filtered", "herald_probability", "g2", "g2_sigma"])
    canvas = _Canvas("Heralded g2(0) vs herald probability (simulated points)")
    xs = _floats(dataset, "herald_probability")
    ys = _floats(dataset, "g2")
    sig = _floats(dataset, "g2_sigma")
    x_axis, y_axis, _ = _axes(canvas, xs, ys, "herald probability", "g2(0)")
    keys = _series_keys(dataset, ["eta_herald", "filtered"])
    for idx, (eta, filtered) in enumerate(keys):
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        for i in range(len(xs)):
            if str(dataset["eta_herald"][i]) != eta or str(dataset["filtered"][i]) != filtered:
                continue
            px, py = x_axis(xs[i]), y_axis(ys[i])
            canvas.line(px, y_axis(ys[i] - sig[i]), px, y_axis(ys[i] + sig[i]),
                        stroke=color)
            if filtered in ("True", "true", "1"):
                canvas.rect(px - 3, py - 3, 6, 6, fill=color)
            else:
                canvas.circle(px, py, 3.2, fill=color)
        marker = "filtered" if filtered in ("True", "true", "1") else "unfiltered"
        canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 16 + 15 * idx,
                    f"eta={eta} {marker}", size=11, anchor="end", color=color)
    return canvas.render()


def _render_threshold_tradeoff(dataset: dict) -> str:
    _require(dataset, ["edge_mv_per_ns", "filtered_g2", "retained_fraction"])
    canvas = _Canvas("g2(0) and retained events vs discrimination edge")
    xs = _floats(dataset, "edge_mv_per_ns")
    ys = _floats(dataset, "filtered_g2")
    y2 = _floats(dataset, "retained_fraction")
    x_axis, y_axis, y2_axis = _axes(canvas, xs, ys, "discrimination edge (mV/ns)",
                                    "filtered g2(0)", y2, "retained fraction")
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    canvas.polyline([(x_axis(xs[i]), y_axis(ys[i])) for i in order], SERIES_COLORS[0])
    canvas.polyline([(x_axis(xs[i]), y2_axis(y2[i])) for i in order],
                    SERIES_COLORS[1], dash="6 4")
    canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 16, "g2(0) (left)",
                size=11, anchor="end", color=SERIES_COLORS[0])
    canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 31, "retained (right)",
                size=11, anchor="end", color=SERIES_COLORS[1])
    return canvas.render()


def _ratio_color(value: float, lo: float, hi: float) -> str:
    # two-stop gradient, light to saturated blue
    frac = 0.0 if hi <= lo else max(0.0, min(1.0, (value - lo) / (hi - lo)))
    r = round(226 - frac * (226 - 21))
    g = round(238 - frac * (238 - 67))
    b = round(248 - frac * (248 - 128))
    return f"#{r:02x}{g:02x}{b:02x}"


def _render_ratio_surface(dataset: dict) -> str:
    _require(dataset, ["lambda_sq", "eta_herald", "improvement_ratio"])
    canvas = _Canvas("Improvement ratio g2_click / g2_PNR")
    lam = _floats(dataset, "lambda_sq")
    eta = _floats(dataset, "eta_herald")
    raw = [str(v) for v in dataset["improvement_ratio"]]
    ratios = [math.inf if v == "inf" else float(v) for v in raw]
    lam_values = sorted(set(lam))
    eta_values = sorted(set(eta))
    x_axis = _Axis(0, len(lam_values), MARGIN_L, WIDTH - MARGIN_R)
    y_axis = _Axis(0, len(eta_values), HEIGHT - MARGIN_B, MARGIN_T)
    finite = [r for r in ratios if math.isfinite(r)] or [1.0]
    lo, hi = min(finite), max(finite)
    cell_w = x_axis(1) - x_axis(0)
    cell_h = abs(y_axis(1) - y_axis(0))
    for i in range(len(lam)):
        col = lam_values.index(lam[i])
        row = eta_values.index(eta[i])
        color = INF_COLOR if math.isinf(ratios[i]) else _ratio_color(ratios[i], lo, hi)
        canvas.rect(x_axis(col), y_axis(row + 1), cell_w, cell_h, fill=color)
    for i, v in enumerate(lam_values):
        if len(lam_values) <= 12 or i % max(1, len(lam_values) // 10) == 0:
            canvas.text(x_axis(i + 0.5), HEIGHT - MARGIN_B + 20, _fmt(v), size=10)
    for i, v in enumerate(eta_values):
        if len(eta_values) <= 12 or i % max(1, len(eta_values) // 10) == 0:
            canvas.text(MARGIN_L - 9, y_axis(i + 0.5) + 4, _fmt(v), size=10, anchor="end")
    canvas.text((MARGIN_L + WIDTH - MARGIN_R) / 2, HEIGHT - 18, "lambda^2", size=13)
    canvas.text(22, HEIGHT / 2, "herald efficiency", size=13, rotate=-90)
    canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 16,
                f"scale {_fmt(lo)}..{_fmt(hi)}, dark red = divergent", size=11, anchor="end")
    return canvas.render()


def _render_slope_histogram(dataset: dict) -> str:
    _require(dataset, ["bin_center", "count", "mixture_fit"])
    canvas = _Canvas("Rising-edge slope histogram with mixture fit")
    xs = _floats(dataset, "bin_center")
    counts = _floats(dataset, "count")
    fit = _floats(dataset, "mixture_fit")
    x_axis, y_axis, _ = _axes(canvas, xs, counts + [0.0], "slope (mV/ns)", "events per bin")
    if len(xs) > 1:
        width = (x_axis(xs[1]) - x_axis(xs[0])) * 0.9
    else:
        width = 4.0
    base = y_axis(0.0)
    for i in range(len(xs)):
        top = y_axis(counts[i])
        canvas.rect(x_axis(xs[i]) - width / 2, top, width, max(base - top, 0.0),
                    fill="#b8cde4")
    canvas.polyline([(x_axis(xs[i]), y_axis(fit[i])) for i in range(len(xs))],
                    "#222222", dash="7 4")
    canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 16, "sum-of-Gaussians fit",
                size=11, anchor="end", color="#222222")
    return canvas.render()


def _render_generic_xy(dataset: dict) -> str:
    if len(dataset) < 2:
        raise SchemaError("generic xy plot needs at least two columns")
    columns = list(dataset)
    canvas = _Canvas(f"{columns[1]} vs {columns[0]}")
    xs = _floats(dataset, columns[0])
    all_y = []
    for col in columns[1:]:
        all_y.extend(_floats(dataset, col))
    x_axis, y_axis, _ = _axes(canvas, xs, all_y, columns[0], ", ".join(columns[1:]))
    for idx, col in enumerate(columns[1:]):
        ys = _floats(dataset, col)
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        points = [(x_axis(xs[i]), y_axis(ys[i])) for i in range(len(xs))
                  if math.isfinite(xs[i]) and math.isfinite(ys[i])]
        canvas.polyline(points, color)
        canvas.text(WIDTH - MARGIN_R - 8, MARGIN_T + 16 + 15 * idx, col,
                    size=11, anchor="end", color=color)
    return canvas.render()


_RENDERERS = {
    "fig3a_curves": (_render_model_curves, "Heralded g2(0) vs herald probability"),
    "fig3a_points": (_render_mc_points, "Heralded g2(0) vs herald probability"),
    "fig3b": (_render_threshold_tradeoff, "g2(0) vs discrimination edge"),
    "fig4": (_render_ratio_surface, "Improvement ratio surface"),
    "fig2b": (_render_slope_histogram, "Slope histogram"),
    "xy": (_render_generic_xy, "xy plot"),
}

PLOT_SPECS = tuple(_RENDERERS)


def emit_plot(dataset: dict, plot_spec: str) -> str:
    """Render a column-oriented dataset to a self-contained SVG document.

    plot_spec names one of PLOT_SPECS. Empty datasets yield an axes-only
    document annotated "no data"; missing required columns raise SchemaError.
    """
    if plot_spec not in _RENDERERS:
        raise SchemaError(f"unknown plot spec {plot_spec!r}; available: {PLOT_SPECS}")
    renderer, title = _RENDERERS[plot_spec]
    if _is_empty(dataset):
        return _no_data(title)
    lengths = {len(v) for v in dataset.values()}
    if len(lengths) != 1:
        raise SchemaError("all dataset columns must have equal length")
    return renderer(dataset)
