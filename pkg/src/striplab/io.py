"""Report writers: CSV tables, JSON reports, run manifests and SVG line plots."""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__

__all__ = ["to_jsonable", "write_csv", "write_json_report", "write_manifest", "write_svg_plot",
           "sha256_file", "format_number"]


def format_number(v) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(v, enum.Enum):
        return v.value if isinstance(v.value, str) else v.name.lower()
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def to_jsonable(obj):
    """Convert numpy values, enums and non-finite floats into JSON-safe values."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return obj.value if isinstance(obj.value, str) else obj.name.lower()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def write_csv(path, rows: Iterable[Mapping], columns: Sequence[str] | None = None) -> Path:
    """Header row plus one line per mapping; floats with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = iter(rows)
    first = next(rows, None)
    if columns is None:
        columns = list(first.keys()) if first is not None else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(columns)
        if first is not None:
            writer.writerow([format_number(first[c]) for c in columns])
        for row in rows:
            writer.writerow([format_number(row[c]) for c in columns])
    return path


def write_json_report(path, params: Mapping, results, errors: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"params": to_jsonable(params), "results": to_jsonable(results),
           "errors": list(errors), "version": __version__}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, subcommand: str, params: Mapping, artifacts: Sequence, exit_code: int) -> Path:
    """``manifest.json`` with the full parameter set and the hash of every artifact."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for a in artifacts:
        a = Path(a)
        if a.exists():
            files[os.path.relpath(a, out_dir)] = sha256_file(a)
    doc = {"subcommand": subcommand, "params": to_jsonable(params), "artifacts": files,
           "exit_code": int(exit_code), "version": __version__}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _ticks(lo: float, hi: float, n: int = 5):
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def write_svg_plot(path, series: Mapping[str, tuple], title: str = "", xlabel: str = "",
                   ylabel: str = "", logx: bool = False, logy: bool = False,
                   width: int = 640, height: int = 400) -> Path:
    """Polyline plot of ``{label: (x, y)}`` with axes, ticks and a legend."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(v)) if logy else (lambda v: v)
    data = {}
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        data[name] = (tx(x[ok]), ty(y[ok]))
    allx = np.concatenate([d[0] for d in data.values()] or [np.zeros(1)])
    ally = np.concatenate([d[1] for d in data.values()] or [np.zeros(1)])
    if allx.size == 0:
        allx = np.zeros(1)
    if ally.size == 0:
        ally = np.zeros(1)
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for v in _ticks(x0, x1):
        lab = ("1e%g" % v) if logx else ("%g" % v)
        out.append(f'<line x1="{px(v):.2f}" y1="{top + ph}" x2="{px(v):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{top + ph + 18}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0, y1):
        lab = ("1e%g" % v) if logy else ("%g" % v)
        out.append(f'<line x1="{left - 5}" y1="{py(v):.2f}" x2="{left}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(v) + 4:.2f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">{ylabel}</text>')
    for i, (name, (x, y)) in enumerate(data.items()):
        c = colours[i % len(colours)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        for a, b in zip(x, y) if x.size <= 40 else ():
            out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{c}"/>')
        ly = top + 15 + 15 * i
        out.append(f'<line x1="{left + pw - 120}" y1="{ly}" x2="{left + pw - 100}" y2="{ly}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 95}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
