"""Figure rendering for the CLI report path.

Each command that writes a delimited report also renders a PNG next to it
(same stem).  The Agg backend is forced and the PNG metadata is pinned so
figure bytes, like the data files, only depend on the run configuration.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PNG_METADATA = {"Software": "contmatch"}
DPI = 110


def _finish(fig, path: str) -> None:
    fig.savefig(path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)


def surface_figure(surfaces: List, markers: Optional[List] = None, path: str = "surface.png"):
    """Objective surfaces: line plots for 1-D parameters, images for 2-D."""
    n = len(surfaces)
    fig, axes = plt.subplots(1, n, figsize=(5.2 * n, 4.2), squeeze=False)
    for ax, surf in zip(axes[0], surfaces):
        if len(surf.axes) == 1:
            ax.plot(surf.axes[0], surf.values, lw=1.2)
            ax.set_xlabel("theta")
            ax.set_ylabel("residual energy")
        else:
            x, y = surf.axes[0], surf.axes[1]
            im = ax.imshow(
                surf.values.T,
                origin="lower",
                aspect="auto",
                extent=(x[0], x[-1], y[0], y[-1]),
                cmap="viridis",
            )
            fig.colorbar(im, ax=ax, shrink=0.85)
            ax.set_xlabel("shift")
            ax.set_ylabel("frequency")
        if markers:
            for theta, label in markers:
                if len(surf.axes) == 1:
                    ax.axvline(theta[0], color="r", ls="--", lw=0.8, label=label)
                else:
                    ax.plot([theta[0]], [theta[1]], "r+", ms=12, mew=1.5, label=label)
            ax.legend(loc="upper right", fontsize=8)
        ax.set_title(surf.kind)
    fig.tight_layout()
    _finish(fig, path)


def scaling_figure(ms: Sequence[int], med: Sequence[float], q10, q90, path: str):
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    ms = np.asarray(ms, dtype=float)
    med = np.asarray(med, dtype=float)
    ax.fill_between(ms, q10, q90, alpha=0.25, label="10-90% band")
    ax.loglog(ms, med, "o-", label="median sup gap")
    positive = med > 0
    if np.any(positive):
        ref = med[positive][0] * np.sqrt(ms[positive][0] / ms)
        ax.loglog(ms, ref, "k--", lw=0.8, label="slope -1/2")
    ax.set_xlabel("sketch rows M")
    ax.set_ylabel("sup energy gap")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _finish(fig, path)


def cover_figure(epsilons, counts, bounds, path: str):
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    inv = 1.0 / np.asarray(epsilons, dtype=float)
    ax.loglog(inv, counts, "o-", label="greedy count")
    if bounds is not None:
        ax.loglog(inv, bounds, "k--", lw=0.9, label="analytic bound")
    ax.set_xlabel("1 / epsilon")
    ax.set_ylabel("covering count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _finish(fig, path)


def verify_figure(seeds, sups, bounds, path: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    x = np.arange(len(seeds))
    ax.plot(x, sups, "o", label="measured sup gap")
    bx = [i for i, b in enumerate(bounds) if b is not None]
    if bx:
        ax.plot(bx, [bounds[i] for i in bx], "k_", ms=14, label="bound")
    ax.set_xticks(x)
    ax.set_xticklabels([str(i) for i in range(len(seeds))], fontsize=7)
    ax.set_xlabel("trial")
    ax.set_ylabel("energy gap")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _finish(fig, path)


def holder_figure(fit_rows, path: str):
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    for row in fit_rows:
        s = np.array([row["binding_separation"]])
        ax.plot(s, [row["binding_distance"]], "o")
        grid = np.geomspace(s[0] / 100, s[0] * 10, 64)
        ax.loglog(
            grid,
            row["beta"] * grid ** row["rho"],
            lw=1.0,
            label=f"coord {row['coordinate']}: beta*s^{row['rho']:g}",
        )
    ax.set_xlabel("separation")
    ax.set_ylabel("projector distance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _finish(fig, path)


def embed_figure(rows, path: str):
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    ms = sorted({r["m"] for r in rows})
    for m in ms:
        vals = [r["max_ratio"] for r in rows if r["m"] == m]
        ax.plot([m] * len(vals), vals, "o", alpha=0.6, ms=4)
    med = [float(np.median([r["max_ratio"] for r in rows if r["m"] == m])) for m in ms]
    ax.plot(ms, med, "k-", lw=1.2, label="median")
    if len(ms) > 1:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("sketch rows M")
    ax.set_ylabel("max pairwise distortion")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _finish(fig, path)
