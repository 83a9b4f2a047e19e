"""Static SVG charts over harness CSVs.

The writer is deliberately hand-rolled: output bytes are a pure function of
the input CSV (no timestamps, no font rendering), every data row becomes
exactly one marker, and tests can count markers. One chart kind exists per
harness CSV schema.
"""

import csv
import math
from pathlib import Path

__all__ = ["PLOT_KINDS", "render_plot"]

PLOT_KINDS = ("f_vs_p", "diff_vs_p", "trace_step", "trace_time", "rho")

_PALETTE = ["#1b6ca8", "#d1495b", "#2e933c", "#f2a104", "#6d3f9e", "#4b4b4b"]

_WIDTH = 640
_HEIGHT = 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 150, 28, 46


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        return list(reader), reader.fieldnames


def _require_columns(fieldnames, needed, path):
    missing = [c for c in needed if c not in fieldnames]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}; found {fieldnames}")


def _series_by_key(rows, key_col, x_col, y_col):
    series = {}
    for row in rows:
        try:
            x = float(row[x_col])
            y = float(row[y_col])
        except ValueError:
            continue
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        label = row[key_col] if key_col else y_col
        series.setdefault(label, []).append((x, y))
    return [(label, pts) for label, pts in series.items()]


def _panel_for(kind, rows, fieldnames, path):
    if kind == "f_vs_p":
        _require_columns(fieldnames, ["method", "p", "f"], path)
        return [("p", "f", _series_by_key(rows, "method", "p", "f"))]
    if kind == "diff_vs_p":
        _require_columns(fieldnames, ["method", "p", "f_org_minus_greedy"], path)
        return [("p", "f_org_minus_greedy", _series_by_key(rows, "method", "p", "f_org_minus_greedy"))]
    if kind == "trace_step":
        _require_columns(fieldnames, ["step", "f"], path)
        return [("step", "f", _series_by_key(rows, None, "step", "f"))]
    if kind == "trace_time":
        _require_columns(fieldnames, ["elapsed_ms", "f"], path)
        return [("elapsed_ms (ms)", "f", _series_by_key(rows, None, "elapsed_ms", "f"))]
    if kind == "rho":
        _require_columns(fieldnames, ["rho", "method", "mean_f", "mean_wall_ms"], path)
        return [
            ("rho", "mean_f", _series_by_key(rows, "method", "rho", "mean_f")),
            ("rho", "mean_wall_ms (ms)", _series_by_key(rows, "method", "rho", "mean_wall_ms")),
        ]
    raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")


def _limits(values):
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _fmt(v):
    return f"{v:.2f}"


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _render_panel(out, x_label, y_label, series, y_offset):
    left = _MARGIN_L
    right = _WIDTH - _MARGIN_R
    top = y_offset + _MARGIN_T
    bottom = y_offset + _HEIGHT - _MARGIN_B

    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = _limits(xs)
    y_lo, y_hi = _limits(ys)

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * (right - left)

    def sy(v):
        return bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top)

    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               'fill="none" stroke="#222222" stroke-width="1"/>')
    for i in range(5):
        frac = i / 4
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        xp, yp = sx(xv), sy(yv)
        out.append(f'<line x1="{_fmt(xp)}" y1="{bottom}" x2="{_fmt(xp)}" y2="{bottom + 5}" stroke="#222222"/>')
        out.append(f'<text x="{_fmt(xp)}" y="{bottom + 18}" font-size="11" text-anchor="middle" '
                   f'font-family="monospace">{_esc(f"{xv:.6g}")}</text>')
        out.append(f'<line x1="{left - 5}" y1="{_fmt(yp)}" x2="{left}" y2="{_fmt(yp)}" stroke="#222222"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(yp + 4)}" font-size="11" text-anchor="end" '
                   f'font-family="monospace">{_esc(f"{yv:.6g}")}</text>')
    out.append(f'<text x="{(left + right) / 2}" y="{bottom + 36}" font-size="13" text-anchor="middle" '
               f'font-family="monospace">{_esc(x_label)}</text>')
    out.append(f'<text x="16" y="{(top + bottom) / 2}" font-size="13" text-anchor="middle" '
               f'font-family="monospace" transform="rotate(-90 16 {(top + bottom) / 2})">{_esc(y_label)}</text>')

    for index, (label, pts) in enumerate(sorted(series, key=lambda kv: kv[0])):
        color = _PALETTE[index % len(_PALETTE)]
        ordered = sorted(pts)
        if len(ordered) > 1:
            coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in ordered)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" fill="{color}"/>')
        ly = top + 14 + 16 * index
        out.append(f'<rect x="{right + 10}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{right + 25}" y="{ly}" font-size="12" font-family="monospace">{_esc(label)}</text>')


def render_plot(csv_path, kind, out_path):
    """Render one CSV into a deterministic SVG chart; returns the output path."""
    rows, fieldnames = _read_csv(csv_path)
    panels = _panel_for(kind, rows, fieldnames, csv_path)
    if all(not series for _, _, series in panels):
        raise ValueError(f"{csv_path}: no plottable data rows for kind {kind!r}")
    for _, _, series in panels:
        if not series:
            raise ValueError(f"{csv_path}: no plottable data rows for kind {kind!r}")
    height = _HEIGHT * len(panels)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'viewBox="0 0 {_WIDTH} {height}">',
        f'<rect width="{_WIDTH}" height="{height}" fill="#ffffff"/>',
    ]
    for i, (x_label, y_label, series) in enumerate(panels):
        _render_panel(out, x_label, y_label, series, i * _HEIGHT)
    out.append("</svg>")
    Path(out_path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")
    return out_path
