"""Figure rendering for the CLI artifacts.

Forces the Agg backend and writes PNG files only, so rendering is headless
and deterministic: the same data yields byte-identical images in a fixed
environment.  The CSV tables remain the primary artifacts; each figure here
is a view of one of them, rendered next to it (suppress with --no-plot).
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .scene import BoundaryCurve, Scene  # noqa: E402
from .spectra import Spectrum  # noqa: E402

__all__ = [
    "DPI",
    "draw_scene",
    "save_spectrum_plot",
    "save_fronts_plot",
    "save_trajectory_plot",
    "save_gradcheck_plot",
    "save_conjugacy_plot",
    "save_uniqueness_plot",
]

DPI = 150


def _curve_xy(curve: BoundaryCurve, n: int = 512) -> np.ndarray:
    t = np.linspace(0.0, 2.0 * np.pi, n + 1)
    r = curve.radius(t)
    return curve.center + np.column_stack([r * np.cos(t), r * np.sin(t)])


def draw_scene(ax, scene: Scene):
    """Bounding curve dashed, obstacles filled; equal aspect."""
    xy = _curve_xy(scene.bounding)
    ax.plot(xy[:, 0], xy[:, 1], "k--", lw=1.0)
    for k in scene.obstacles:
        xy = _curve_xy(k)
        ax.fill(xy[:, 0], xy[:, 1], color="0.8", ec="0.3", lw=1.0, zorder=2)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def save_spectrum_plot(path, spectrum: Spectrum) -> Path:
    """Travelling time over the launch grid; non-exited nodes masked."""
    times = np.array([r.time for r in spectrum.records])
    ok = np.array([r.status == "exited" for r in spectrum.records])
    grid = np.ma.masked_where(~ok, times).reshape(spectrum.n_x, spectrum.n_theta)
    half = 0.5 * math.pi - spectrum.delta
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    mesh = ax.pcolormesh(
        np.linspace(-half, half, spectrum.n_theta),
        np.arange(spectrum.n_x) / spectrum.n_x,
        grid,
        shading="nearest",
    )
    fig.colorbar(mesh, ax=ax, label="travelling time")
    ax.set_xlabel("launch angle")
    ax.set_ylabel("boundary parameter")
    ax.set_title(spectrum.scene_id)
    fig.tight_layout()
    return _save(fig, path)


def save_fronts_plot(path, scene: Scene, fronts, labels) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    draw_scene(ax, scene)
    colors = plt.cm.viridis(np.linspace(0.0, 0.9, max(len(fronts), 2)))
    for front, label, color in zip(fronts, labels, colors):
        ax.plot(front.points[:, 0], front.points[:, 1], color=color,
                lw=1.4, label=label)
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    return _save(fig, path)


def save_trajectory_plot(path, scene: Scene, points, events) -> Path:
    """Sampled path polyline with markers at the recorded crossings."""
    points = np.asarray(points)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    draw_scene(ax, scene)
    ax.plot(points[:, 0], points[:, 1], color="C0", lw=1.2)
    for e in events:
        marker = "o" if e.curve != "bounding" else "s"
        ax.plot([e.point[0]], [e.point[1]], marker, color="C3", ms=4, zorder=3)
    ax.plot([points[0, 0]], [points[0, 1]], "^", color="C2", ms=7, zorder=3)
    fig.tight_layout()
    return _save(fig, path)


def save_gradcheck_plot(path, entries) -> Path:
    """Numeric against analytic boundary derivative, with the diagonal."""
    numeric = np.array([e[2] for e in entries])
    analytic = np.array([e[3] for e in entries])
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    if len(entries):
        lo = float(min(numeric.min(), analytic.min()))
        hi = float(max(numeric.max(), analytic.max()))
        pad = 0.05 * (hi - lo or 1.0)
        ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], "k--", lw=0.8)
        ax.plot(analytic, numeric, ".", ms=4)
    ax.set_xlabel("analytic derivative")
    ax.set_ylabel("re-aimed finite difference")
    ax.set_aspect("equal")
    fig.tight_layout()
    return _save(fig, path)


def save_conjugacy_plot(path, entries) -> Path:
    """Residual per draw on a log axis, split by draw kind."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for kind, marker in (("relation", "."), ("boundary", "x")):
        res = [(i, e[6]) for i, e in enumerate(entries) if e[0] == kind]
        if res:
            idx, vals = zip(*res)
            ax.semilogy(idx, vals, marker, label=kind)
    ax.set_xlabel("draw")
    ax.set_ylabel("conjugacy residual")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def save_uniqueness_plot(path, rows) -> Path:
    """Spectrum deviation against obstacle distance for each perturbation."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    eps = np.array([r.eps for r in rows])
    sup = np.array([r.sup_dev for r in rows])
    hau = np.array([r.hausdorff for r in rows])
    good = np.isfinite(sup) & (eps > 0.0)
    if good.any():
        ax.loglog(eps[good], np.maximum(sup[good], 1e-17), "o-",
                  label="spectrum sup deviation")
        ax.loglog(eps[good], np.maximum(hau[good], 1e-17), "s--",
                  label="obstacle Hausdorff distance")
    ax.set_xlabel("perturbation eps")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
