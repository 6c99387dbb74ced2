"""Figure rendering for report output.

Uses the Agg backend so the CLI works headless; every function writes a
PNG to the given path and returns it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["potential_comparison", "reflection_magnitude"]


def potential_comparison(path, original, reconstructed, labels=("input", "reconstructed")):
    """N x N panel grid overlaying two potential grids element by element."""
    n = original.n_channels
    fig, axes = plt.subplots(n, n, figsize=(4.0 * n, 3.0 * n),
                             squeeze=False, sharex=True)
    for i in range(n):
        for j in range(n):
            ax = axes[i][j]
            if j < i:
                ax.axis("off")
                continue
            ax.plot(original.x, original.values[:, i, j], "k-", lw=1.2,
                    label=labels[0])
            if reconstructed is not None:
                ax.plot(reconstructed.x, reconstructed.values[:, i, j], "r--",
                        lw=1.2, label=labels[1])
            ax.set_title(f"V{i + 1}{j + 1}", fontsize=10)
            ax.axhline(0.0, color="0.8", lw=0.6, zorder=0)
            if i == n - 1:
                ax.set_xlabel("x")
    axes[0][0].legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def reflection_magnitude(path, table, other=None, labels=("input", "transformed")):
    """|R_ij|(k) panels for one table, optionally overlaid with a second."""
    n = table.sys.n_channels
    fig, axes = plt.subplots(n, n, figsize=(4.0 * n, 3.0 * n),
                             squeeze=False, sharex=True)
    for i in range(n):
        for j in range(n):
            ax = axes[i][j]
            ax.plot(table.k_grid, np.abs(table.R[:, i, j]), "k-", lw=1.0,
                    label=labels[0])
            if other is not None:
                ax.plot(other.k_grid, np.abs(other.R[:, i, j]), "r--", lw=1.0,
                        label=labels[1])
            ax.set_title(f"|R{i + 1}{j + 1}|", fontsize=10)
            ax.set_yscale("log")
            if i == n - 1:
                ax.set_xlabel("k")
    axes[0][0].legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
