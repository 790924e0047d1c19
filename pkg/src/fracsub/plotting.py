"""PNG rendering of paths, densities and convergence tables.

Everything goes through the Agg backend with the PNG software tag removed,
so identical data give byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 0.9,
    "path.simplify": False,
}


def _save(fig, filename):
    fig.tight_layout()
    fig.savefig(filename, format="png", metadata={"Software": None})
    plt.close(fig)


def plot_staircase(x, y, filename, title="", xlabel="", ylabel=""):
    """Right-continuous staircase through the jump points ``(x[n], y[n])``."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.step(x, y, where="post", color="k")
        ax.set(title=title, xlabel=xlabel, ylabel=ylabel)
        _save(fig, filename)


def plot_densities(x, curves: dict, filename, title="", xlabel="x", ylabel="u(x, t)"):
    """Overlay of named density curves on a common grid."""
    styles = ["k-", "r--", "b:", "g-."]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for (name, y), st in zip(curves.items(), styles * 4):
            ax.plot(x, y, st, label=name)
        ax.set(title=title, xlabel=xlabel, ylabel=ylabel)
        ax.legend(frameon=False)
        _save(fig, filename)


def plot_series(x, series: dict, filename, title="", xlabel="", ylabel="", log=True):
    """Convergence-type plot of one or more series against ``x``."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name, y in series.items():
            ax.plot(x, np.asarray(y, dtype=float), "o-", label=name)
        if log:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set(title=title, xlabel=xlabel, ylabel=ylabel)
        ax.legend(frameon=False)
        _save(fig, filename)
