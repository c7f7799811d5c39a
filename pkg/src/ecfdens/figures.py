"""Matplotlib renderings saved next to the delimited outputs."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_chi_curve(curve, selected_kappa, path) -> None:
    kappas = [k for k, _ in curve]
    chis = [c for _, c in curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.step(kappas, chis, where="post")
    ax.axvline(selected_kappa, color="tab:red", ls="--", lw=1,
               label=f"selected kappa = {selected_kappa:g}")
    ax.set_xlabel("kappa")
    ax.set_ylabel("Euler characteristic")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_density(estimate, path, model=None) -> None:
    grid = estimate.x_grid
    fig, ax = plt.subplots(figsize=(6, 4))
    if grid.d == 1:
        x = grid.axes()[0]
        ax.plot(x, estimate.values, label="estimate")
        if model is not None:
            ax.plot(x, model.density(x[:, None]), ls="--", label="target")
            ax.legend()
        ax.set_xlabel("x")
        ax.set_ylabel("density")
    elif grid.d == 2:
        im = ax.imshow(
            estimate.values.T,
            origin="lower",
            extent=(grid.lo[0], grid.hi[0], grid.lo[1], grid.hi[1]),
            aspect="auto",
        )
        fig.colorbar(im, ax=ax, label="density")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
    else:
        plt.close(fig)
        raise ValueError("density figures support d in {1, 2}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_risk_curves(rows, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    n = [row.n for row in rows]
    ax.errorbar(
        n,
        [row.risk_mean for row in rows],
        yerr=[row.risk_std for row in rows],
        marker="o",
        capsize=3,
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("normalized risk")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_rate_fit(study, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.asarray(study.n_values, dtype=float)
    r = np.asarray(study.risk_means, dtype=float)
    ax.loglog(n, r, "o", label="measured")
    anchor = r[0]
    ax.loglog(n, anchor * (n / n[0]) ** study.fitted_slope, "-",
              label=f"fit slope {study.fitted_slope:.3f}")
    if study.theoretical_exponent is not None:
        ax.loglog(n, anchor * (n / n[0]) ** study.theoretical_exponent, "--",
                  label=f"theory slope {study.theoretical_exponent:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("normalized risk")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
