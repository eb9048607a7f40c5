"""Figures written next to the CSV reports (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_convergence(report, path):
    """Log-log DG, final-time L2 and energy-loss errors against h = max(h_x, h_t)."""
    plt = _pyplot()
    quantities = (("dg_err", "DG-norm error"), ("l2T_err", "L2 error at T"),
                  ("e_loss", "energy loss"))
    fig, axes = plt.subplots(1, len(quantities), figsize=(13, 4), constrained_layout=True)
    keys = sorted({(r.p, r.k_mode) for r in report.records})
    for ax, (attr, title) in zip(axes, quantities):
        for p, mode in keys:
            fam = report.family(p, mode)
            h = np.array([max(r.h_x, r.h_t) for r in fam])
            e = np.array([getattr(r, attr) for r in fam])
            keep = e > 0
            if not keep.any():
                continue
            slope = report.rates.get((p, mode), {}).get(attr)
            label = f"p={p}" + ("" if mode == "equispaced" else f" ({mode})")
            if slope is not None:
                label += f", slope {slope:.2f}"
            ax.loglog(h[keep], e[keep], "o-", label=label)
        ax.set_xlabel("h")
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def plot_solution(x, shape, frames, path):
    """Re of the discrete and exact solutions at each sample time."""
    plt = _pyplot()
    dim = x.shape[1]
    if dim == 1:
        fig, ax = plt.subplots(figsize=(7, 4), constrained_layout=True)
        for t, uh, ue in frames:
            line, = ax.plot(x[:, 0], uh.real, label=f"Re psi_hp, t={t:g}")
            ax.plot(x[:, 0], ue.real, "--", color=line.get_color(), alpha=0.6)
        ax.set_xlabel("x")
        ax.legend(fontsize="small")
    else:
        fig, axes = plt.subplots(2, len(frames), figsize=(4 * len(frames), 6.5),
                                 constrained_layout=True, squeeze=False)
        X = x[:, 0].reshape(shape)
        Y = x[:, 1].reshape(shape)
        for col, (t, uh, ue) in enumerate(frames):
            for row, (data, name) in enumerate(((uh, "Re psi_hp"), (ue, "Re psi"))):
                ax = axes[row, col]
                im = ax.pcolormesh(X, Y, data.real.reshape(shape), shading="auto", cmap="RdBu_r")
                ax.set_title(f"{name}, t={t:g}")
                ax.set_aspect("equal")
                fig.colorbar(im, ax=ax, shrink=0.8)
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def plot_condition(records, path):
    """kappa_2 of the slab matrix against h per p."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for p in sorted({r[1] for r in records}):
        rows = [r for r in records if r[1] == p]
        h = [max(r[3], r[4]) for r in rows]
        ax.loglog(h, [r[6] for r in rows], "o-", label=f"p={p}")
    ax.set_xlabel("h")
    ax.set_ylabel("kappa_2")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)
