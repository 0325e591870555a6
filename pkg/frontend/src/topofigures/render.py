"""Deterministic matplotlib rendering of recipe figures.

Output is SVG with a pinned hash salt and no embedded date, so rerunning
on identical inputs reproduces identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update(
    {
        "svg.hashsalt": "topofigures",
        "figure.dpi": 100,
        "font.size": 9,
        "axes.titlesize": 9,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
    }
)

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def new_figure(n_rows: int, n_cols: int, width: float = 3.2, height: float = 2.4):
    fig, axes = plt.subplots(
        n_rows, n_cols, figsize=(width * n_cols, height * n_rows),
        constrained_layout=True, squeeze=False,
    )
    if n_rows == 1 and n_cols == 1:
        return fig, axes[0, 0]
    if n_rows == 1:
        return fig, axes[0]
    if n_cols == 1:
        return fig, axes[:, 0]
    return fig, axes
