"""results.csv, summary.json and front.svg writers."""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from pathlib import Path

from . import _ext
from .experiments import RESULT_COLUMNS, ExperimentResult, ResultRow

SVG_W, SVG_H, PAD = 640, 480, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


class OutputError(OSError):
    pass


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def results_csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for r in sorted(rows):
        writer.writerow([r.experiment, r.method, r.lam, r.seed, r.metric, repr(float(r.value))])
    return buf.getvalue()


def read_results(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != RESULT_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [ResultRow(e, m, lam, int(s), metric, float(v)) for e, m, lam, s, metric, v in reader]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def front_svg(series: dict, axes: tuple, title: str) -> str:
    """Static polyline plot, one line per series."""
    pts = [p for line in series.values() for p in line if all(math.isfinite(c) for c in p)]
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{SVG_W // 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>',
    ]
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def sx(x):
            return PAD + (x - x0) / (x1 - x0) * (SVG_W - 2 * PAD)

        def sy(y):
            return SVG_H - PAD - (y - y0) / (y1 - y0) * (SVG_H - 2 * PAD)

        lines.append(f'<line x1="{PAD}" y1="{SVG_H - PAD}" x2="{SVG_W - PAD}" y2="{SVG_H - PAD}" stroke="black"/>')
        lines.append(f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{SVG_H - PAD}" stroke="black"/>')
        for val, anchor_x in ((x0, PAD), (x1, SVG_W - PAD)):
            lines.append(f'<text x="{anchor_x}" y="{SVG_H - PAD + 16}" text-anchor="middle" font-size="11">{val:.4g}</text>')
        for val, anchor_y in ((y0, SVG_H - PAD), (y1, PAD)):
            lines.append(f'<text x="{PAD - 6}" y="{anchor_y}" text-anchor="end" font-size="11">{val:.4g}</text>')
        lines.append(f'<text x="{SVG_W // 2}" y="{SVG_H - 16}" text-anchor="middle" font-size="13">{axes[0]}</text>')
        lines.append(f'<text x="16" y="{SVG_H // 2}" text-anchor="middle" font-size="13" '
                     f'transform="rotate(-90 16 {SVG_H // 2})">{axes[1]}</text>')
        for i, (name, line) in enumerate(sorted(series.items())):
            color = COLORS[i % len(COLORS)]
            coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in line if math.isfinite(x) and math.isfinite(y))
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
            ly = PAD + 16 * i
            lines.append(f'<text x="{SVG_W - PAD + 4}" y="{ly}" font-size="11" fill="{color}">{name}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_outputs(result: ExperimentResult, config: dict, out_dir) -> dict:
    """Write the three artifacts into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    paths = {name: out / name for name in ("results.csv", "summary.json", "front.svg")}
    summary = {
        "experiment": result.experiment,
        "config": config,
        "git_describe": git_describe(),
        "kernel_backend": _ext.BACKEND,
        "rows": len(result.rows),
        "aggregates": result.summary,
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths["results.csv"].write_text(results_csv_text(result.rows), encoding="utf-8")
        paths["summary.json"].write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=True) + "\n",
                                         encoding="utf-8")
        paths["front.svg"].write_text(front_svg(result.series, result.axes, result.experiment), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write outputs to {out}: {exc}") from exc
    return paths
