"""Figure rendering for survey outputs.

Renders the sweep maps (alphabet size over the (alpha, beta) simplex and the
accompanying measure maps), scan traces, and class histograms to image files
next to the CSV they were computed from.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .survey import SurveyRecord, nmax_percentages


def _grid_arrays(records: list[SurveyRecord], value_fn):
    alphas = sorted({r.params[0] for r in records})
    betas = sorted({r.params[1] for r in records})
    ai = {a: i for i, a in enumerate(alphas)}
    bi = {b: i for i, b in enumerate(betas)}
    z = np.full((len(betas), len(alphas)), np.nan)
    for r in records:
        z[bi[r.params[1]], ai[r.params[0]]] = value_fn(r)
    return np.array(alphas), np.array(betas), z


def render_sweep_maps(records: list[SurveyRecord], out_prefix: str) -> list[str]:
    """Write the alphabet-size map and the three measure maps; returns paths."""
    paths = []

    a, b, z = _grid_arrays(records, lambda r: r.n_max)
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    mesh = ax.pcolormesh(a, b, z, shading="nearest", cmap="viridis", vmin=4, vmax=8)
    fig.colorbar(mesh, ax=ax, label="maximal alphabet size")
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$\beta$")
    ax.set_title("orthogonal-encoding alphabet size")
    fig.tight_layout()
    path = out_prefix + "_nmax.png"
    fig.savefig(path, dpi=160)
    plt.close(fig)
    paths.append(path)

    panels = [
        ("ggm", lambda r: r.measures.ggm, "genuine multipartite entanglement"),
        ("neg_sq_monogamy", lambda r: r.measures.neg_sq_monogamy, "squared-negativity monogamy"),
        ("dc_capacity_bits", lambda r: r.measures.dc_capacity_bits, "dense coding capacity [bits]"),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.0))
    for ax, (key, fn, title) in zip(axes, panels):
        a, b, z = _grid_arrays(records, fn)
        mesh = ax.pcolormesh(a, b, z, shading="nearest", cmap="magma")
        fig.colorbar(mesh, ax=ax)
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel(r"$\beta$")
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    path = out_prefix + "_measures.png"
    fig.savefig(path, dpi=160)
    plt.close(fig)
    paths.append(path)
    return paths


def render_scan(records: list[SurveyRecord], out_prefix: str) -> list[str]:
    """Step plot of n_max along a one-parameter family scan."""
    xs = [r.params[0] for r in records]
    ys = [r.n_max for r in records]
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.step(xs, ys, where="mid")
    ax.set_xlabel("family parameter")
    ax.set_ylabel("maximal alphabet size")
    ax.set_ylim(min(ys) - 0.5, max(ys) + 0.5)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = out_prefix + "_scan.png"
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return [path]


def render_class_histogram(records: list[SurveyRecord], out_prefix: str) -> list[str]:
    """Bar chart of the n_max distribution of a sampled family."""
    pct = nmax_percentages(records)
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    keys = sorted(pct)
    ax.bar([str(k) for k in keys], [pct[k] for k in keys], color="#3a6ea5")
    for i, k in enumerate(keys):
        ax.text(i, pct[k], f"{pct[k]:.2f}%", ha="center", va="bottom", fontsize=9)
    ax.set_xlabel("maximal alphabet size")
    ax.set_ylabel("fraction of samples [%]")
    fam = records[0].family if records else ""
    ax.set_title(f"{fam} ({len(records)} samples)")
    fig.tight_layout()
    path = out_prefix + "_hist.png"
    fig.savefig(path, dpi=160)
    plt.close(fig)
    return [path]
