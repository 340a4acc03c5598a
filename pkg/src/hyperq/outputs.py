"""Run artifacts: key=value configs, JSON documents, manifests and SVG charts."""
from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError

__all__ = ["read_config_file", "write_json", "write_text", "write_manifest", "svg_line_chart", "MANIFEST_NAME"]

MANIFEST_NAME = "manifest.json"


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; '#' starts a comment, dashes in keys become underscores."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for k, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{k}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{k}: empty key")
        out[key.replace("-", "_")] = val
    return out


def write_text(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_json(path, doc) -> None:
    write_text(path, json.dumps(doc, indent=2) + "\n")


def write_manifest(out_dir, config: Mapping, version: str, checks: Mapping, wall_clock: float,
                   extra: Mapping | None = None) -> Path:
    """Write the single manifest of ``out_dir`` (replacing any earlier one)."""
    body = {"tool": "hyperq", "version": version, "config": dict(config), "checks": dict(checks)}
    if extra:
        body.update(extra)
    body["wall_clock_seconds"] = round(float(wall_clock), 3)
    path = Path(out_dir) / MANIFEST_NAME
    write_json(path, body)
    return path


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def svg_line_chart(series: Sequence[tuple], title: str = "", xlabel: str = "", ylabel: str = "",
                   width: int = 640, height: int = 400) -> str:
    """Static SVG line chart.

    ``series`` holds ``(label, xs, ys)`` triples; non-finite points are
    skipped. Output depends only on the data, so reruns are byte-identical.
    """
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    ml, mr, mt, mb = 70, 20, 30, 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>')
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pw, ph = width - ml - mr, height - mt - mb

        def sx(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return mt + (1 - (y - y0) / (y1 - y0)) * ph

        out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for tx in _ticks(x0, x1):
            out.append(f'<text x="{sx(tx):.1f}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">'
                       f'{tx:.4g}</text>')
        for ty in _ticks(y0, y1):
            out.append(f'<text x="{ml - 6}" y="{sy(ty) + 3:.1f}" text-anchor="end" font-size="10">{ty:.4g}</text>')
        for k, (label, xs, ys) in enumerate(series):
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys)
                              if math.isfinite(x) and math.isfinite(y))
            c = colors[k % len(colors)]
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
            out.append(f'<text x="{ml + 8}" y="{mt + 14 + 14 * k}" font-size="11" fill="{c}">{_esc(label)}</text>')
        if xlabel:
            out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">'
                       f'{_esc(xlabel)}</text>')
        if ylabel:
            out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
                       f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def resolve_out_dir(flag_value, config_value, default="hyperq_out") -> Path:
    """--out flag, then HYPERQ_OUT, then the config file, then the default."""
    for v in (flag_value, os.environ.get("HYPERQ_OUT"), config_value):
        if v:
            return Path(v)
    return Path(default)
