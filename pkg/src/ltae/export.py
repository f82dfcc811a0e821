"""File formats for trajectories: CSV with a JSON sidecar, and static SVG projections."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError
from .trajectory import Trajectory

PALETTE = ("#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b")


def _meta_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def _fmt(v: float) -> str:
    return repr(float(v))


def save_trajectory(
    traj: Trajectory,
    path,
    displacement=None,
    speed=None,
    metadata: dict | None = None,
) -> None:
    """Write ``t_s,x,y,z[,displacement][,speed]`` rows plus a ``.meta.json`` sidecar."""
    path = Path(path)
    cols = ["t_s", "x", "y", "z"]
    extra = []
    if displacement is not None:
        cols.append("displacement")
        extra.append(np.asarray(displacement))
    if speed is not None:
        cols.append("speed")
        extra.append(np.asarray(speed))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    t = traj.times
    for i in range(len(traj)):
        w.writerow([_fmt(t[i]), *map(_fmt, traj.coords[i]), *(_fmt(e[i]) for e in extra)])
    path.write_text(buf.getvalue(), encoding="utf-8")

    meta = {
        "sample_rate_hz": traj.sample_rate_hz,
        "condition": traj.condition_tag,
        "filter_ms": traj.filter_ms,
        "n_samples": len(traj),
    }
    meta.update(metadata or {})
    _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"), newline="")))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise ParseError(f"{path}: no trajectory rows")
    header = [h.strip() for h in rows[0]]
    try:
        idx = [header.index(c) for c in ("t_s", "x", "y", "z")]
    except ValueError:
        raise ParseError(f"{path}: header must contain t_s, x, y, z") from None
    try:
        data = np.array([[float(r[i]) for i in idx] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{path}: non-finite values")

    meta = {}
    if _meta_path(path).exists():
        meta = json.loads(_meta_path(path).read_text())
    rate = meta.get("sample_rate_hz")
    if rate is None:
        if data.shape[0] < 2:
            raise ParseError(f"{path}: cannot infer sample rate from a single row")
        rate = 1.0 / (data[1, 0] - data[0, 0])
    return Trajectory(float(rate), data[:, 1:], meta.get("condition") or "", meta.get("filter_ms"))


def trajectory_to_dict(traj: Trajectory, metadata: dict | None = None) -> dict:
    d = {
        "sample_rate_hz": traj.sample_rate_hz,
        "condition": traj.condition_tag,
        "filter_ms": traj.filter_ms,
        "coords": traj.coords.tolist(),
    }
    d.update(metadata or {})
    return d


def trajectories_svg(
    trajs: Sequence[Trajectory],
    size: int = 240,
    margin: int = 12,
    max_points: int = 2000,
) -> str:
    """Three orthographic panels (xy, xz, yz), one polyline per trajectory.

    Trajectories sharing a condition tag share a color. Long trajectories are
    decimated to at most ``max_points`` vertices per polyline.
    """
    planes = (("x", "y", 0, 1), ("x", "z", 0, 2), ("y", "z", 1, 2))
    tags = []
    for t in trajs:
        if t.condition_tag not in tags:
            tags.append(t.condition_tag)
    colors = {tag: PALETTE[i % len(PALETTE)] for i, tag in enumerate(tags)}

    allc = np.vstack([t.coords for t in trajs]) if trajs else np.zeros((1, 3))
    lo, hi = allc.min(axis=0), allc.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    width = 3 * size
    height = size + 40
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    inner = size - 2 * margin
    for p, (a, b, i, j) in enumerate(planes):
        x0 = p * size
        out.append(
            f'<g transform="translate({x0},0)">'
            f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" '
            f'fill="none" stroke="#999"/>'
            f'<text x="{size // 2}" y="{size + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{a}{b}</text>'
        )
        for t in trajs:
            c = t.coords[:: max(1, len(t) // max_points)]
            u = margin + (c[:, i] - lo[i]) / span[i] * inner
            v = margin + inner - (c[:, j] - lo[j]) / span[j] * inner
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(u, v))
            out.append(
                f'<polyline fill="none" stroke="{colors[t.condition_tag]}" '
                f'stroke-width="0.8" points="{pts}"/>'
            )
        out.append("</g>")
    for k, tag in enumerate(tags):
        out.append(
            f'<text x="{4 + 80 * k}" y="{height - 2}" font-family="sans-serif" '
            f'font-size="11" fill="{colors[tag]}">{tag or "untagged"}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(trajs: Sequence[Trajectory], path, **kw) -> None:
    Path(path).write_text(trajectories_svg(trajs, **kw), encoding="utf-8")
