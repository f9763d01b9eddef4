"""Report figures rendered to files (Agg backend, no display needed)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_error_vs_contrast", "plot_ecdf", "plot_eigen_vs_bounds"]

_STYLE = {"hill": dict(color="0.45", marker="s"),
          "vanilla": dict(color="#c44e52", marker="o"),
          "vr": dict(color="#4c72b0", marker="D")}


def _style(label):
    return _STYLE.get(label, dict(marker="o"))


def plot_error_vs_contrast(per_model, path):
    """per_model maps label -> list of per-contrast stat dicts."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for label, rows in per_model.items():
        rows = sorted(rows, key=lambda r: r["R"])
        r_vals = [row["R"] for row in rows]
        med = [row["phi_median"] for row in rows]
        ax.plot(r_vals, med, label=label, lw=1.2, ms=4, **_style(label))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"contrast $R$")
    ax.set_ylabel("median normalized-space error")
    ax.grid(True, which="both", alpha=0.25, lw=0.4)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ecdf(per_model, path):
    """per_model maps label -> (sorted errors, cumulative fractions)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for label, (x, y) in per_model.items():
        if len(x):
            ax.step(x, y, where="post", label=label, lw=1.2,
                    color=_style(label).get("color"))
    ax.set_xscale("log")
    ax.set_xlabel("relative Frobenius error")
    ax.set_ylabel("fraction of samples")
    ax.set_ylim(0, 1.02)
    ax.grid(True, which="both", alpha=0.25, lw=0.4)
    ax.legend(frameon=False, fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_eigen_vs_bounds(eigen_rows, path, label=""):
    """Predicted eigenvalue range of each sample against its bounds.

    Samples are sorted by the admissible width so violations, if any,
    stand out as markers outside the shaded band.
    """
    rows = sorted(eigen_rows, key=lambda r: r["voigt_max"] - r["reuss_min"])
    idx = np.arange(len(rows))
    lo = np.array([r["reuss_min"] for r in rows])
    hi = np.array([r["voigt_max"] for r in rows])
    pmin = np.array([r["pred_min"] for r in rows])
    pmax = np.array([r["pred_max"] for r in rows])
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.fill_between(idx, lo, hi, color="0.85", label="admissible band")
    ax.plot(idx, pmin, ".", ms=2.5, color="#4c72b0", label="prediction min")
    ax.plot(idx, pmax, ".", ms=2.5, color="#c44e52", label="prediction max")
    bad = (pmin < lo) | (pmax > hi)
    if bad.any():
        ax.plot(idx[bad], pmin[bad], "x", ms=6, color="k", label="violation")
    ax.set_yscale("log")
    ax.set_xlabel("sample (sorted by band width)")
    ax.set_ylabel("eigenvalue")
    title = "eigenvalues vs bounds" + (f" ({label})" if label else "")
    ax.set_title(title, fontsize=9)
    ax.grid(True, which="both", alpha=0.25, lw=0.4)
    ax.legend(frameon=False, fontsize=7, loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
