"""SVG figures for plans, tours and sweep results."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon, RegularPolygon  # noqa: E402

from . import geometry as geo  # noqa: E402
from .planners import REPAIR, MeasurementSet  # noqa: E402

# stable ids and no timestamp, so identical inputs give identical files
matplotlib.rcParams["svg.hashsalt"] = "hexcover"
_SVG_META = {"Date": None}

STYLE = {
    "hexcover": dict(color="tab:blue", marker="o"),
    "diskcover": dict(color="tab:red", marker="s"),
    "hexcovertour": dict(color="tab:blue", marker="o"),
    "diskcovertour": dict(color="tab:red", marker="s"),
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_META, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_tour(env: geo.Environment, samples: MeasurementSet, order, path, title: str = "") -> Path:
    """Environment outline, hexagonal cells, samples and the closed tour."""
    pts = samples.points
    fig, ax = plt.subplots(figsize=(6, min(12.0, max(2.0, 6.0 * env.height / env.width))))
    ax.add_patch(Polygon(env.vertices, closed=True, fill=False, edgecolor="black", linewidth=1.5))
    r = samples.r_min_used
    if math.isfinite(r) and r > 0:
        for (x, y), tag in zip(pts, samples.tags):
            if tag != REPAIR:
                # flat-top cell of edge r around each tiling sample
                ax.add_patch(RegularPolygon((x, y), 6, radius=r, orientation=math.pi / 6,
                                            fill=False, edgecolor="0.75", linewidth=0.5))
    if len(order) > 1:
        seq = pts[list(order) + [order[0]]]
        ax.plot(seq[:, 0], seq[:, 1], "-", color="tab:orange", linewidth=1.0, label="tour")
    normal = [t != REPAIR for t in samples.tags]
    ax.plot(pts[normal, 0], pts[normal, 1], "o", color="tab:blue", markersize=3, label="samples")
    repaired = [not n for n in normal]
    if any(repaired):
        ax.plot(pts[repaired, 0], pts[repaired, 1], "x", color="tab:red", markersize=4, label="repair")
    x0, y0, x1, y1 = env.bounds
    pad = 0.05 * env.scale
    ax.set_xlim(x0 - pad, x1 + pad)
    ax.set_ylim(y0 - pad, y1 + pad)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small")
    return _save(fig, path)


def _sweep_figure(rows, algorithms, value_key: str, ylabel: str, path) -> Path:
    fracs = sorted({float(r["delta_fraction"]) for r in rows}, reverse=True)
    fig, axes = plt.subplots(1, len(fracs), figsize=(4.2 * len(fracs), 3.6), squeeze=False)
    for ax, frac in zip(axes[0], fracs):
        for algo in algorithms:
            sel = sorted(
                (float(r["area_m2"]), float(r[value_key]))
                for r in rows
                if r["algorithm"] == algo and float(r["delta_fraction"]) == frac and r[value_key] not in ("", None)
            )
            if sel:
                xs, ys = zip(*sel)
                ax.plot(xs, ys, label=algo, markersize=4, **STYLE.get(algo, {}))
        ax.set_title(f"delta / sigma0^2 = {frac:g}")
        ax.set_xlabel("area (m^2)")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        if ax.lines:
            ax.legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def plot_samples_vs_area(rows, path) -> Path:
    """Sample count against environment area, one panel per tolerance."""
    return _sweep_figure(rows, ["hexcover", "diskcover"], "n_samples", "number of samples", path)


def plot_tour_vs_area(rows, path) -> Path:
    """Tour length (after 2-opt) against environment area, one panel per tolerance."""
    return _sweep_figure(rows, ["hexcovertour", "diskcovertour"], "tour_length_m", "tour length (m)", path)
