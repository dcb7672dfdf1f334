"""Volumetric plots and summary tables.

The SVG is written by hand so output bytes depend only on the inputs.  Depth
runs along a logarithmic horizontal axis and width up the vertical axis; cell
colour encodes mean snippet fidelity on a fixed 8-step ramp, marker size
shrinks with the dropped-gate fraction and a star marks the target shape.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = 1

# light grey (F near 0) through to deep orange-brown (F near 1)
RAMP = ("#f0f0f0", "#e3d6c9", "#dcc0a2", "#e3a677", "#e58a4c", "#dc6b25", "#bf4f0c", "#8c2d04")

VOLUMETRIC_COLUMNS = ("variant", "w", "d", "mean_fidelity", "gm_fidelity", "eps", "dropped_fraction",
                      "marker_size", "excluded", "is_target", "schema_version")
SUMMARY_COLUMNS = ("algorithm_size", "predicted_capability", "observed_capability",
                   "scalability_coefficient", "capability_coefficient", "F0_log10", "F_log10",
                   "label", "schema_version")


def ramp_color(f: float | None) -> str:
    if f is None or not math.isfinite(f):
        return RAMP[0]
    return RAMP[min(int(max(f, 0.0) * len(RAMP)), len(RAMP) - 1)]


def marker_size(dropped_fraction: float | None, full: float = 1.0) -> float:
    """Relative marker size, growing linearly with the retained-gate fraction."""
    kept = 1.0 - (dropped_fraction or 0.0)
    return round(full * (0.35 + 0.65 * kept), 6)


@dataclass(frozen=True)
class VolumetricCell:
    w: int
    d: int
    mean_fidelity: float | None
    dropped_fraction: float | None
    marker_size: float
    is_target: bool
    excluded: bool = False
    gm_fidelity: float | None = None
    eps: float | None = None
    variant: str = ""


def cells_from_aggregates(aggregates, target_shape=None, variant: str = "") -> list[VolumetricCell]:
    tgt = tuple(target_shape) if target_shape else None
    return [VolumetricCell(a.w, a.d, a.mean_fidelity, a.dropped_fraction, marker_size(a.dropped_fraction),
                           (a.w, a.d) == tgt, a.excluded, a.gm_fidelity, a.eps, variant)
            for a in sorted(aggregates, key=lambda a: (a.w, a.d))]


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def volumetric_csv(cells) -> str:
    rows = [[c.variant, c.w, c.d, _num(c.mean_fidelity), _num(c.gm_fidelity), _num(c.eps),
             _num(c.dropped_fraction), _num(c.marker_size), _num(c.excluded), _num(c.is_target),
             SCHEMA_VERSION] for c in cells]
    return _csv_text(VOLUMETRIC_COLUMNS, rows)


def _star(cx: float, cy: float, r: float) -> str:
    pts = []
    for k in range(10):
        rad = r if k % 2 == 0 else 0.45 * r
        ang = -math.pi / 2 + k * math.pi / 5
        pts.append(f"{cx + rad * math.cos(ang):.2f},{cy + rad * math.sin(ang):.2f}")
    return " ".join(pts)


def volumetric_svg(cells, target_shape=None, title: str = "") -> str:
    ws = [c.w for c in cells] + ([target_shape[0]] if target_shape else [])
    ds = [c.d for c in cells] + ([target_shape[1]] if target_shape else [])
    w_hi = max(ws)
    ld_lo, ld_hi = math.log10(min(ds)), math.log10(max(ds))
    span = max(ld_hi - ld_lo, 1e-9)
    left, top, plot_w, row_h = 70, 40, 520, 36
    plot_h = row_h * w_hi
    cell = 26.0

    def x(d):
        return left + 20 + (math.log10(d) - ld_lo) / span * (plot_w - 40)

    def y(w):
        return top + plot_h - (w - 0.5) * row_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + plot_w + 150}" '
           f'height="{top + plot_h + 60}" font-family="sans-serif" font-size="11">']
    if title:
        out.append(f'<text x="{left}" y="20" font-size="13">{_escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>')
    for w in range(1, w_hi + 1):
        out.append(f'<text x="{left - 8}" y="{y(w) + 4:.2f}" text-anchor="end">{w}</text>')
    for d in sorted(set(ds)):
        out.append(f'<text x="{x(d):.2f}" y="{top + plot_h + 16}" text-anchor="middle">{d}</text>')
    out.append(f'<text x="{left + plot_w / 2}" y="{top + plot_h + 36}" text-anchor="middle">'
               f'depth (log scale)</text>')
    out.append(f'<text x="20" y="{top + plot_h / 2}" transform="rotate(-90 20 {top + plot_h / 2})" '
               f'text-anchor="middle">width</text>')
    for c in cells:
        s = cell * c.marker_size
        attrs = (f'x="{x(c.d) - s / 2:.2f}" y="{y(c.w) - s / 2:.2f}" width="{s:.2f}" height="{s:.2f}"')
        if c.excluded:
            out.append(f'<rect class="cell excluded" {attrs} fill="none" stroke="#444" stroke-dasharray="3,2"/>')
        else:
            out.append(f'<rect class="cell" {attrs} fill="{ramp_color(c.mean_fidelity)}" stroke="#444"/>')
    if target_shape:
        w_c, d_c = target_shape
        out.append(f'<polygon class="target" points="{_star(x(d_c), y(w_c), 11)}" '
                   f'fill="#f5c400" stroke="#7a6200"/>')
    lx = left + plot_w + 20
    for k, colour in enumerate(RAMP):
        yy = top + (len(RAMP) - 1 - k) * 16
        out.append(f'<rect x="{lx}" y="{yy}" width="14" height="14" fill="{colour}" stroke="#444"/>')
        out.append(f'<text x="{lx + 20}" y="{yy + 11}">{k / len(RAMP):.3g}-{(k + 1) / len(RAMP):.3g}</text>')
    out.append(f'<text x="{lx}" y="{top + len(RAMP) * 16 + 14}">mean fidelity</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_volumetric(aggregates, target_shape, out_dir, title: str = "", variant: str = "") -> tuple[Path, Path]:
    """Write ``volumetric.svg`` and ``volumetric.csv`` into ``out_dir``."""
    aggregates = list(aggregates)
    if not aggregates:
        raise ValueError("emit_volumetric needs at least one aggregate")
    out_dir = Path(out_dir)
    cells = cells_from_aggregates(aggregates, target_shape, variant)
    svg, csv_path = out_dir / "volumetric.svg", out_dir / "volumetric.csv"
    svg.write_text(volumetric_svg(cells, target_shape, title))
    csv_path.write_text(volumetric_csv(cells))
    return svg, csv_path


# --- summary -------------------------------------------------------------------------


def sig(x, n: int = 2) -> str:
    """Round to ``n`` significant figures without switching to exponent notation."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    digits = n - 1 - math.floor(math.log10(abs(x)))
    r = round(x, digits)
    # rounding can carry into a new leading digit (e.g. 99.7 -> 100)
    digits = n - 1 - math.floor(math.log10(abs(r))) if r else digits
    r = round(r, digits)
    return str(int(r)) if digits <= 0 else f"{r:.{digits}f}"


def pct(x, n: int) -> str:
    return "n/a" if x is None else sig(100.0 * x, n) + "%"


def summary_row(summary, label: str = "") -> list[str]:
    """Display row in the order: Q_T, Q_0, Q_C, scalability, capability, F0, F."""
    def exp10(v):
        return "n/a" if v is None else str(int(round(v)))
    return [sig(summary.Q_T, 2), sig(summary.Q_0, 2), sig(summary.Q_C, 2),
            pct(summary.scalability, 2), pct(summary.capability, 1),
            exp10(summary.F0_log10), exp10(summary.F_log10), label, str(SCHEMA_VERSION)]


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def summary_json(summary, label: str = "", extra: dict | None = None) -> str:
    body = {k: _finite(v) for k, v in summary.to_dict().items()}
    data = {"schema_version": SCHEMA_VERSION, "label": label, **body}
    if extra:
        data.update(extra)
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def emit_summary(summary, out_dir, label: str = "", extra: dict | None = None) -> tuple[Path, Path]:
    """Write ``summary.csv`` (display precision) and ``summary.json`` (full precision)."""
    out_dir = Path(out_dir)
    csv_path, json_path = out_dir / "summary.csv", out_dir / "summary.json"
    csv_path.write_text(_csv_text(SUMMARY_COLUMNS, [summary_row(summary, label)]))
    json_path.write_text(summary_json(summary, label, extra))
    return csv_path, json_path
