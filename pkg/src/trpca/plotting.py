"""Figures: sample with density contours and ridge overlay, and score scatter.

Only the non-interactive Agg/SVG backends are used, so figures can be
written from headless runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import TWO_PI, cmod  # noqa: E402
from .models import density  # noqa: E402

CONTOUR_GRID = 100
_TICKS = [-np.pi, -np.pi / 2, 0.0, np.pi / 2, np.pi]
_TICK_LABELS = [r"$-\pi$", r"$-\pi/2$", "0", r"$\pi/2$", r"$\pi$"]


def split_at_seam(points):
    """Split a closed torus curve into pieces that do not jump across the seam.

    Consecutive points whose coordinates differ by more than ``pi`` are
    separated, and each piece is extended to the boundary where it leaves
    the square. When the curve closes up without crossing the seam the last
    piece continues into the first one.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        return [pts]
    nxt = np.roll(pts, -1, axis=0)
    jump = np.any(np.abs(nxt - pts) > np.pi, axis=1)
    if not jump.any():
        return [np.vstack([pts, pts[:1]])]
    # start just after a crossing so every piece is contiguous in the loop
    first = (int(np.flatnonzero(jump)[0]) + 1) % pts.shape[0]
    pts = np.roll(pts, -first, axis=0)
    jump = np.roll(jump, -first)
    pieces, current = [], [_seam_points(pts[-1], pts[0])[1], pts[0]]
    for k in range(pts.shape[0]):
        a = pts[k]
        b = pts[(k + 1) % pts.shape[0]]
        if not jump[k]:
            if k + 1 < pts.shape[0]:
                current.append(b)
            continue
        exit_pt, entry_pt = _seam_points(a, b)
        current.append(exit_pt)
        pieces.append(np.array(current))
        current = [entry_pt, b] if k + 1 < pts.shape[0] else []
    if current:
        pieces.append(np.array(current))
    return pieces


def _seam_points(a, b):
    """Where the shortest step from ``a`` to ``b`` leaves and re-enters the square."""
    step = cmod(b - a)
    frac = 1.0
    for j in range(2):
        if step[j] == 0:
            continue
        edge = np.pi if step[j] > 0 else -np.pi
        f = (edge - a[j]) / step[j]
        if 0 <= f < frac:
            frac = f
    exit_pt = a + frac * step
    entry_pt = exit_pt.copy()
    for j in range(2):
        if abs(exit_pt[j]) >= np.pi - 1e-12:
            entry_pt[j] = -exit_pt[j]
    return exit_pt, entry_pt


def _style_torus_axes(ax, xlabel=r"$\theta_1$", ylabel=r"$\theta_2$"):
    ax.set_xlim(-np.pi, np.pi)
    ax.set_ylim(-np.pi, np.pi)
    ax.set_xticks(_TICKS, _TICK_LABELS)
    ax.set_yticks(_TICKS, _TICK_LABELS)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_aspect("equal")


def plot_ridge_view(ax, sample, params, ridge_points, color_by=None):
    """Sample scatter, density contours on a 100 x 100 grid and the ridge.

    Ridge pieces carry the SVG ids ``ridge-segment-0``, ``ridge-segment-1``, ...
    """
    g = -np.pi + TWO_PI * (np.arange(CONTOUR_GRID) + 0.5) / CONTOUR_GRID
    t1, t2 = np.meshgrid(g, g, indexing="xy")
    if params is not None:
        z = density(np.stack([t1.ravel(), t2.ravel()], axis=1), params).reshape(t1.shape)
        ax.contour(t1, t2, z, levels=8, colors="0.55", linewidths=0.7)
    pts = np.asarray(sample, dtype=float).reshape(-1, 2)
    if color_by is None:
        ax.scatter(pts[:, 0], pts[:, 1], s=6, color="0.2", alpha=0.6, linewidths=0)
    else:
        ax.scatter(pts[:, 0], pts[:, 1], s=6, c=color_by, cmap="rainbow",
                   vmin=-np.pi, vmax=np.pi, linewidths=0)
    for k, piece in enumerate(split_at_seam(ridge_points)):
        (line,) = ax.plot(piece[:, 0], piece[:, 1], color="black", linewidth=1.8)
        line.set_gid(f"ridge-segment-{k}")
    _style_torus_axes(ax)


def plot_scores(ax, s1, s2, labels=None):
    """Score scatter in the first/second score plane, colored by ``s1``."""
    if labels is None:
        ax.scatter(s1, s2, s=6, c=s1, cmap="rainbow", vmin=-np.pi, vmax=np.pi, linewidths=0)
    else:
        for lab in np.unique(labels):
            sel = labels == lab
            ax.scatter(np.asarray(s1)[sel], np.asarray(s2)[sel], s=6, linewidths=0,
                       label=f"component {lab}")
        ax.legend(loc="upper right", fontsize="small")
    _style_torus_axes(ax, "first score", "second score")


def save_figure(fig, path):
    """Write a figure; SVG output is made deterministic (no date, fixed ids)."""
    path = str(path)
    with matplotlib.rc_context({"svg.hashsalt": "trpca", "svg.fonttype": "none"}):
        kwargs = {"metadata": {"Date": None}} if path.endswith(".svg") else {}
        fig.savefig(path, bbox_inches="tight", **kwargs)
    plt.close(fig)


def ridge_figure(sample, params, ridge_points, scores=None):
    """One-panel (or two-panel with scores) figure of a fit."""
    ncols = 1 if scores is None else 2
    fig, axes = plt.subplots(1, ncols, figsize=(5.0 * ncols, 5.0), squeeze=False)
    color = None if scores is None else scores[0]
    plot_ridge_view(axes[0, 0], sample, params, ridge_points, color_by=color)
    if scores is not None:
        plot_scores(axes[0, 1], scores[0], scores[1])
    fig.tight_layout()
    return fig
