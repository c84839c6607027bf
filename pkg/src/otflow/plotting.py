"""Figures for the CLI report path.  Everything renders off-screen to files."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_densities(curves, path, title=""):
    """``curves``: iterable of (label, x, values)."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, x, values in curves:
        ax.plot(x, values, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_map(x, T, path):
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(x, T, label="T(x)")
    ax.plot(x, x, "--", color="grey", lw=0.8, label="identity")
    ax.set_xlabel("x")
    ax.set_ylabel("T(x)")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_trajectory(records, path, title=""):
    """Energy, minimum density and a few snapshots from trajectory records."""
    t = np.array([r["t"] for r in records])
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
    axes[0].plot(t, [r["energy"] for r in records], marker=".")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("energy")
    axes[1].plot(t, [r["min_density"] for r in records], marker=".")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("min density")
    picks = sorted({0, len(records) // 2, len(records) - 1})
    for i in picks:
        u = np.asarray(records[i]["density"])
        axes[2].plot(np.arange(len(u)) / len(u), u, label=f"t={records[i]['t']:.3g}")
    axes[2].set_xlabel("x")
    axes[2].legend(fontsize="small")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_convergence(taus, gaps, path):
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(taus, gaps, "o-", label="sup gap")
    ref = gaps[-1] * np.asarray(taus) / taus[-1]
    ax.loglog(taus, ref, "--", color="grey", label="order 1")
    ax.set_xlabel("tau")
    ax.set_ylabel("|u_jko - u_pde|_inf")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_counterexample(hs, A, B, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(hs, np.abs(A), "o-", label="|A(h)|")
    ax.loglog(hs, B, "s-", label="B(h)")
    ax.set_xlabel("h")
    ax.legend(fontsize="small")
    return _save(fig, path)


__all__ = [
    "plot_densities",
    "plot_map",
    "plot_trajectory",
    "plot_convergence",
    "plot_counterexample",
]
