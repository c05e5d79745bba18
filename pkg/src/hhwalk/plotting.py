"""Bar charts of stationary probability against household degree."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SRW_COLOR = "#1f77b4"
N2V_COLOR = "#ff7f0e"

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    # stable ids so reruns give byte-identical SVG
    "svg.hashsalt": "hhwalk",
    "svg.fonttype": "none",
}


def _bars(ax, degrees, pi_n2v, pi_srw, title):
    x = np.arange(len(degrees))
    width = 0.4
    ax.bar(x - width / 2, pi_srw, width, color=SRW_COLOR, label="simple random walk")
    ax.bar(x + width / 2, pi_n2v, width, color=N2V_COLOR, label="node2vec")
    ax.set_xticks(x)
    ax.set_xticklabels([str(d) for d in degrees])
    ax.set_xlabel("degree in household model")
    ax.set_ylabel("stationary probability")
    ax.set_title(title)


def plot_panel(path, degrees, pi_n2v, pi_srw, title):
    """One panel: node2vec bars next to simple-random-walk bars per degree."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        _bars(ax, degrees, pi_n2v, pi_srw, title)
        ax.legend(loc="upper left")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def plot_grid(path, panels, ncols=3):
    """All panels in one figure; ``panels`` is a list of (degrees, n2v, srw, title)."""
    nrows = -(-len(panels) // ncols)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(3.4 * ncols, 2.7 * nrows),
                                 squeeze=False)
        for ax, (deg, n2v, srw, title) in zip(axes.flat, panels):
            _bars(ax, deg, n2v, srw, title)
        for ax in axes.flat[len(panels):]:
            ax.set_visible(False)
        axes.flat[0].legend(loc="upper left")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
