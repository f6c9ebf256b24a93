"""Trace tables: CSV round trip and SVG heatmaps."""

from dataclasses import dataclass, field
import csv
import html

import numpy as np


@dataclass
class Trace:
    """Per-epoch measurements.

    ``mode`` is ``"spectral"`` (columns ``delta_k<k>``) or ``"filter"``
    (columns ``e_low_d<delta>``, ``e_high_d<delta>``). Each row is
    ``(epoch, loss, *values)`` in column order.
    """

    mode: str
    columns: list
    rows: list = field(default_factory=list)

    def append(self, epoch, loss, values):
        values = [float(v) for v in values]
        if len(values) != len(self.columns):
            raise ValueError("row width does not match trace columns")
        self.rows.append((int(epoch), float(loss), *values))

    @property
    def epochs(self):
        return [r[0] for r in self.rows]

    @property
    def losses(self):
        return [r[1] for r in self.rows]

    def column(self, name):
        j = self.columns.index(name)
        return [r[2 + j] for r in self.rows]

    def matrix(self):
        """``(n_columns, n_rows)`` array of the metric values."""
        return np.array([r[2:] for r in self.rows], dtype=float).T.reshape(len(self.columns), -1)


def spectral_columns(ks):
    return [f"delta_k{int(k)}" for k in ks]


def delta_label(delta):
    return format(float(delta), "g")


def filter_columns(deltas):
    cols = []
    for d in deltas:
        cols += [f"e_low_d{delta_label(d)}", f"e_high_d{delta_label(d)}"]
    return cols


def _fmt(v):
    return format(v, ".17g")


def emit_csv(trace, path):
    if not trace.rows:
        raise ValueError("empty trace")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", *trace.columns])
        for row in trace.rows:
            w.writerow([str(row[0]), *(_fmt(v) for v in row[1:])])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:2] != ["epoch", "loss"]:
        raise ValueError(f"{path}: not a trace file")
    cols = header[2:]
    mode = "filter" if cols and cols[0].startswith("e_") else "spectral"
    trace = Trace(mode, cols)
    for r in body:
        trace.rows.append((int(r[0]), *(float(v) for v in r[1:])))
    return trace


def error_color(value):
    """Blue for relative error >= 1, red for 0, linear in between."""
    t = float(np.clip(value, 0.0, 1.0)) if np.isfinite(value) else 1.0
    return f"rgb({round(255 * (1 - t))},0,{round(255 * t)})"


def emit_heatmap_svg(trace, path, cell_w=None, cell_h=24, title=None):
    """Rows are the trace columns (frequencies or filter errors), columns
    are recorded epochs."""
    if not trace.rows:
        raise ValueError("empty trace")
    values = trace.matrix()
    n_rows, n_cols = values.shape
    if cell_w is None:
        cell_w = max(1.0, min(24.0, 720.0 / n_cols))
    left, top, bottom, right = 110, 30 if title else 12, 46, 12
    width = left + n_cols * cell_w + right
    height = top + n_rows * cell_h + bottom
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:g}" y="18" text-anchor="middle">{html.escape(title)}</text>')
    for i, name in enumerate(trace.columns):
        y = top + i * cell_h
        label = name.replace("delta_k", "k=") if trace.mode == "spectral" else name
        out.append(f'<text x="{left - 6}" y="{y + cell_h * 0.65:g}" text-anchor="end">{html.escape(label)}</text>')
        for j in range(n_cols):
            out.append(f'<rect class="cell" x="{left + j * cell_w:g}" y="{y:g}" width="{cell_w:g}" '
                       f'height="{cell_h}" fill="{error_color(values[i, j])}"/>')
    epochs = trace.epochs
    base = top + n_rows * cell_h
    ticks = sorted({0, n_cols // 2, n_cols - 1})
    for j in ticks:
        x = left + (j + 0.5) * cell_w
        out.append(f'<text x="{x:g}" y="{base + 14}" text-anchor="middle">{epochs[j]}</text>')
    out.append(f'<text x="{left + n_cols * cell_w / 2:g}" y="{base + 34}" text-anchor="middle">epoch</text>')
    ylabel = "frequency index" if trace.mode == "spectral" else "filtered error"
    out.append(f'<text x="14" y="{top + n_rows * cell_h / 2:g}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + n_rows * cell_h / 2:g})">{ylabel}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path
