"""Figures written next to the CSV reports."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "route": {"count2d": ("C0", "o", "2D inertia"),
              "modesum": ("C1", "s", "1D mode sum"),
              "predict": ("k", None, "asymptotic prediction")},
}


def figure_size(width=6.0, height=None):
    """Golden-ratio figure in inches."""
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    return width, height or width * golden_ratio


def rc(fontsize=10):
    return {
        "figure.figsize": figure_size(),
        "figure.facecolor": "white",
        "savefig.dpi": 150,
        "font.size": fontsize,
        "axes.labelsize": fontsize,
        "legend.fontsize": fontsize - 2,
        "xtick.labelsize": fontsize - 1,
        "ytick.labelsize": fontsize - 1,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "cuspcount",
    }


def _save(fig, path):
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_comparison(rows, routes, path, title=""):
    """N_lambda / lambda against lambda for each route."""
    with plt.rc_context(rc()):
        fig, ax = plt.subplots()
        for route in routes:
            pts = [(r.lam, r.values[route] / r.lam) for r in rows if route in r.values]
            if not pts:
                continue
            color, marker, label = _STYLE["route"][route]
            x, y = zip(*pts)
            ax.plot(x, y, color=color, marker=marker, ls="-" if marker is None else "--", label=label)
        ax.set_xscale("log")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel(r"$N_\lambda / \lambda$")
        if title:
            ax.set_title(title, fontsize=9)
        if ax.get_legend_handles_labels()[0]:
            ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_series(pairs, path, ylabel, title="", logy=False):
    """Single series against lambda (count1d / count2d / predict reports)."""
    with plt.rc_context(rc()):
        fig, ax = plt.subplots()
        if pairs:
            x, y = zip(*pairs)
            ax.plot(x, y, marker="o", ms=3)
        if len(pairs) > 1 and min(p[0] for p in pairs) > 0:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title, fontsize=9)
        fig.tight_layout()
        _save(fig, path)


def plot_convergence(table, path):
    """Count per refinement level, one line per (lambda, route)."""
    with plt.rc_context(rc()):
        fig, ax = plt.subplots()
        keys = sorted({(row["lambda"], row["route"]) for row in table})
        for lam, route in keys:
            sel = [row for row in table if row["lambda"] == lam and row["route"] == route]
            ax.plot([r["level"] for r in sel], [r["count"] for r in sel], marker="o",
                    label=f"{route}, $\\lambda$={lam:g}")
        ax.set_xlabel("refinement level")
        ax.set_ylabel(r"$N_\lambda$")
        if keys:
            ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_transverse(rows, path):
    """mu f / sigma against x."""
    with plt.rc_context(rc()):
        fig, ax = plt.subplots()
        pts = [(r["x"], r["mu_f_over_sigma"]) for r in rows if r["mu_f_over_sigma"] is not None]
        if pts:
            x, y = zip(*pts)
            ax.plot(x, y, marker="o", ms=3)
        ax.axhline(1.0, color="k", lw=0.8, ls=":")
        ax.set_xscale("log")
        ax.set_xlabel("$x$")
        ax.set_ylabel(r"$\mu f / \sigma$")
        fig.tight_layout()
        _save(fig, path)
