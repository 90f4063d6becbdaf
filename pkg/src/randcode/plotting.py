"""Figure rendering for the CLI report path (needs the ``plot`` extra).

Each function takes the same data the CLI writes as CSV/JSON and saves one
figure; the delimited output stays the canonical record.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (4.5, 3.2),
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "randcode",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def table2_figure(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        log2q = [int(r["q"]).bit_length() - 1 for r in rows]
        ax.plot(log2q, [r["skr_over_dw"] for r in rows], "o-", label="SKR/DW")
        ax.plot(log2q, [r["skr_over_delta_i"] for r in rows], "s--", label=r"SKR/$\Delta I$")
        ax.set_xlabel(r"$\log_2 q$")
        ax.set_ylabel("key ratio")
        ax.legend()
        _save(fig, path)


def score_dist_figure(hist, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        edges = np.asarray(hist["edges"])
        if edges.size > 1:
            ax.stairs(hist["fake_density"], edges, label="fake rows")
            ax.stairs(hist["true_density"], edges, label="true row")
            ax.axvline(hist["theta"], color="k", lw=0.8, ls=":", label=r"$\theta$")
        ax.set_xlabel("score")
        ax.set_ylabel("density")
        ax.legend()
        _save(fig, path)


def leakage_figure(rows, mode, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if mode == "sigma":
            s = [r["sigma_x2"] for r in rows]
            ax.loglog(s, [r["ixy_over_T"] for r in rows], label=r"$I(X;Y)/T$")
            ax.loglog(s, [r["iey_over_T"] for r in rows], label=r"$I(E;Y)/T$")
            ax2 = ax.twinx()
            ax2.semilogx(s, [r["ratio"] for r in rows], "k:", label="ratio")
            ax2.set_ylabel(r"$I(E;Y)/I(X;Y)$")
            ax.set_xlabel(r"$\sigma_X^2$")
            ax.set_ylabel("bits per pulse / T")
        else:
            km = [r["km"] for r in rows]
            rate = [r["key_bits_per_s"] if r["key_bits_per_s"] > 0 else np.nan for r in rows]
            ax.semilogy(km, rate, label="random codebook")
            ax.semilogy(km, [r["dw_bits_per_s"] for r in rows], "--", label="DW bound")
            ax.set_xlabel("distance (km)")
            ax.set_ylabel("key bits/s")
        ax.legend(loc="best")
        _save(fig, path)


def landscape_figure(land, path, marker=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        G, D = np.meshgrid(land.gammas, land.deltas, indexing="ij")
        vals = np.where(land.values > 0, land.values, np.nan)
        cs = ax.contourf(D, G, vals, levels=20)
        fig.colorbar(cs, ax=ax, label="SKR/DW")
        if marker is not None:
            ax.plot(marker[1], marker[0], "r+", ms=10)
        ax.set_xlabel(r"$\delta$")
        ax.set_ylabel(r"$\gamma$")
        _save(fig, path)


def acceptance_figure(alpha, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        a = np.array([c == "1" for c in alpha], dtype=float)
        if a.size:
            ax.plot(np.arange(1, a.size + 1), np.cumsum(a) / np.arange(1, a.size + 1))
        ax.set_xlabel("block")
        ax.set_ylabel("running acceptance rate")
        _save(fig, path)
