"""Figures written next to the CSV output (SVG, fixed size, reproducible bytes)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (8.0, 6.0)  # 800 x 600 px at 100 dpi


def _style():
    plt.rcParams.update(
        {
            "svg.hashsalt": "hemihelix",
            "svg.fonttype": "none",
            "font.size": 11,
            "axes.grid": True,
            "grid.alpha": 0.3,
        }
    )


def _save(fig, path):
    fig.savefig(path, format="svg", dpi=100, metadata={"Date": None})
    plt.close(fig)


def bifurcation_diagram(points, lambda0: float, path, title: str | None = None) -> None:
    """``f`` against ``s``; stable points (``mu_min > 0``) solid, unstable dashed.

    The point ``s = 0`` is neutral; when present its force anchors the straight-rod line.
    """
    _style()
    fig, ax = plt.subplots(figsize=FIGSIZE)
    s = np.array([p.s for p in points])
    f = np.array([p.f for p in points])
    stable = np.array([p.mu_min > 0 for p in points])
    order = np.argsort(s)
    s, f, stable = s[order], f[order], stable[order]
    if np.any(s == 0.0):
        lambda0 = float(f[s == 0.0][0])

    span = max(float(np.ptp(f)), 1e-3 * abs(lambda0), 1e-12)
    ax.plot([0, 0], [lambda0, lambda0 + span], color="k", lw=2.5, label="straight rod, stable")
    ax.plot([0, 0], [lambda0 - span, lambda0], color="k", lw=1.2, ls="--", label="straight rod, unstable")
    labelled = set()
    for i in range(len(s) - 1):
        ok = all(stable[j] for j in (i, i + 1) if s[j] != 0.0)
        key = "stable" if ok else "unstable"
        ax.plot(
            s[i : i + 2],
            f[i : i + 2],
            color="C0",
            lw=2.5 if ok else 1.2,
            ls="-" if ok else "--",
            label=f"branch, {key}" if key not in labelled else None,
        )
        labelled.add(key)
    ax.plot(s, f, "o", color="C0", ms=3)
    ax.axhline(lambda0, color="0.5", lw=0.8)
    ax.set_xlabel("amplitude s")
    ax.set_ylabel("force f")
    ax.set_title(title or "bifurcation diagram")
    ax.legend(loc="best")
    _save(fig, path)


def centerline_projections(curves: dict[str, np.ndarray], path, title: str | None = None) -> None:
    """Three orthographic projections (x-y, x-z, y-z) of each centerline."""
    _style()
    fig, axes = plt.subplots(1, 3, figsize=FIGSIZE)
    pairs = [(0, 1, "x", "y"), (0, 2, "x", "z"), (1, 2, "y", "z")]
    styles = ["-", "--", ":", "-."]
    for ax, (i, j, xi, yj) in zip(axes, pairs):
        for n, (label, pts) in enumerate(curves.items()):
            ax.plot(pts[:, i], pts[:, j], ls=styles[n % len(styles)], label=label)
        ax.set_xlabel(xi)
        ax.set_ylabel(yj)
        ax.set_aspect("equal", adjustable="datalim")
    axes[0].legend(loc="best", fontsize=8)
    fig.suptitle(title or "centerline projections")
    fig.tight_layout()
    _save(fig, path)
