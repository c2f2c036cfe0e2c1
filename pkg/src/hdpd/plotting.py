"""Static rendering of phase diagrams."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.patches import Patch

from .diagrams import Diagram

NON_ONSET_COLOR = "#4d9ee0"
ONSET_COLOR = "#e06c4d"
QUERIED_COLOR = "#2b2b2b"


def render_diagram(diagram: Diagram, path: str, title: str | None = None) -> None:
    """Write a PNG of the onset/non-onset map with the record's own cell marked."""
    ny, nx = diagram.shape
    fig, ax = plt.subplots(figsize=(max(4.0, nx * 0.35), max(3.5, ny * 0.35)))
    cmap = ListedColormap([NON_ONSET_COLOR, ONSET_COLOR])
    ax.imshow(
        diagram.label,
        cmap=cmap,
        vmin=0,
        vmax=1,
        origin="lower",
        aspect="auto",
        interpolation="nearest",
    )
    ax.scatter(
        [diagram.origin_x],
        [diagram.origin_y],
        marker="*",
        s=220,
        c="white",
        edgecolors="black",
        linewidths=1.2,
        zorder=3,
    )
    if diagram.queried is not None:
        qy, qx = np.nonzero(diagram.queried)
        ax.scatter(qx, qy, marker=".", s=20, c=QUERIED_COLOR, zorder=2)
    ax.set_xticks(range(nx))
    ax.set_xticklabels([_fmt(v) for v in diagram.axis_x], rotation=90, fontsize=7)
    ax.set_yticks(range(ny))
    ax.set_yticklabels([_fmt(v) for v in diagram.axis_y], fontsize=7)
    ax.set_xlabel(diagram.var_x)
    ax.set_ylabel(diagram.var_y)
    ax.set_title(
        title
        or f"{diagram.record_id} | {diagram.disease} | {diagram.mode} | {diagram.pattern}",
        fontsize=9,
    )
    handles = [
        Patch(facecolor=NON_ONSET_COLOR, label="non-onset"),
        Patch(facecolor=ONSET_COLOR, label="onset"),
    ]
    ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.02, 1.0), fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fmt(v: float) -> str:
    return f"{v:g}" if abs(v) < 1e4 else f"{v:.2e}"
