"""Matplotlib renderings of solver output, written as reproducible PNGs.

The Agg backend is forced and the PNG Software tag is stripped so the same
inputs produce byte-identical files across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE = dict(dpi=110, metadata={"Software": None})


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def save_trajectory_plot(traj, path, title="state trajectory", ylabel="z"):
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ts = traj.grid.nodes
    for k in range(traj.dim):
        ax.plot(ts, traj.values[:, k], lw=1.4, label=f"{ylabel}_{k + 1}")
    for j, tau in enumerate(traj.grid.impulse_times):
        ax.axvline(tau, color="0.75", lw=0.8, zorder=0)
        ax.plot(
            [tau] * traj.dim,
            traj.right_values[j],
            marker="o",
            ms=3.5,
            ls="none",
            color="C3",
        )
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if traj.dim > 1:
        ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_convergence_plot(deltas, rho, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    sweeps = np.arange(1, len(deltas) + 1)
    ax.semilogy(sweeps, deltas, "o-", lw=1.4, label="sweep delta")
    if len(deltas) >= 2 and rho > 0:
        ref = deltas[0] * rho ** (sweeps - 1.0)
        ax.semilogy(sweeps, ref, "--", color="0.6", lw=1.0, label="certificate rate")
    ax.set_xlabel("sweep")
    ax.set_ylabel("sup distance between iterates")
    ax.set_title("fixed-point sweep convergence")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_perturbation_plot(rows, path, title="perturbation response"):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ds = [r.delta for r in rows]
    ax.loglog(ds, [r.sup_z_err for r in rows], "o-", lw=1.4, label="state error")
    ax.loglog(ds, [r.sup_y_err for r in rows], "s-", lw=1.2, label="inner error")
    ax.loglog(
        ds, [r.gronwall_ceiling for r in rows], "--", color="0.5", lw=1.0,
        label="envelope ceiling",
    )
    ax.loglog(
        ds, [r.y_bound for r in rows], ":", color="0.5", lw=1.0,
        label="inner bound",
    )
    ax.set_xlabel("perturbation size")
    ax.set_ylabel("sup error")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_hypotheses_plot(estimates, path):
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    names = [e.name for e in estimates]
    pos = np.arange(len(names))
    ax.bar(pos - 0.18, [e.declared for e in estimates], width=0.36, label="declared")
    ax.bar(
        pos + 0.18,
        [e.observed_extremum for e in estimates],
        width=0.36,
        label="observed",
    )
    for i, e in enumerate(estimates):
        if e.verdict != "consistent":
            ax.annotate(
                "refuted", (pos[i], max(e.declared, e.observed_extremum)),
                ha="center", va="bottom", fontsize=8, color="C3",
            )
    ax.set_xticks(pos)
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("constant")
    ax.set_title("declared constants vs randomized extrema")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def save_accuracy_plot(cells, gaps, path, title="grid refinement"):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(cells, gaps, "o-", lw=1.4)
    ax.set_xlabel("cells")
    ax.set_ylabel("sup gap to reference")
    ax.set_title(title)
    _finish(fig, path)
