"""Figure rendering for orbit samples, counting profiles and identity suites.

Everything draws on an Agg canvas and writes straight to files, so the CLI can
drop figures next to its delimited output on headless machines.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG_STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "axes.titlesize": 11,
}


def _new_axes(title: str):
    with plt.rc_context(FIG_STYLE):
        fig, ax = plt.subplots()
    ax.set_title(title)
    return fig, ax


def save_figure(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def orbit_figure(sample_dict: dict, title: str = "orbit points"):
    """Scatter of recovered orbit points with the search circle."""
    fig, ax = _new_axes(title)
    R = float(sample_dict["R"])
    theta = np.linspace(0, 2 * math.pi, 400)
    ax.plot(R * np.cos(theta), R * np.sin(theta), lw=0.8, color="gray", label=f"|w| = {R:g}")
    xs, ys, sizes = [], [], []
    for pt in sample_dict["points"]:
        loc = pt["location"]
        if not isinstance(loc, dict):
            loc = {"re": loc, "im": 0.0}
        xs.append(loc["re"])
        ys.append(loc["im"])
        sizes.append(28 * pt["multiplicity"])
    ax.scatter(xs, ys, s=sizes, color="crimson", zorder=3, label="recovered")
    z = sample_dict["z"]
    if isinstance(z, dict):
        ax.scatter([z["re"]], [z["im"]], marker="x", color="black", zorder=4, label="z")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("Re w")
    ax.set_ylabel("Im w")
    ax.legend(loc="upper right", fontsize=8)
    return fig


def counting_figure(profile_dict: dict, title: str = "orbit counting function"):
    """log-log n(r, z) samples with the fitted exponent."""
    fig, ax = _new_axes(title)
    rs = np.array([float(s["r"]) for s in profile_dict["samples"]])
    ns = np.array([s["n"] for s in profile_dict["samples"]], dtype=float)
    ax.loglog(rs, np.maximum(ns, 0.5), "o-", color="navy", label="n(r, z)")
    rho = profile_dict["rho_hat"]
    if not profile_dict.get("degenerate_fit") and ns[-1] > 0:
        ref = ns[-1] * (rs / rs[-1]) ** rho
        ax.loglog(rs, np.maximum(ref, 0.5), "--", color="gray", label=f"slope {rho:.3f}")
    ax.set_xlabel("r")
    ax.set_ylabel("n(r, z)")
    ax.legend(fontsize=8)
    return fig


def wiman_figure(wiman_dict: dict, title: str = "minimum-modulus radii"):
    fig, ax = _new_axes(title)
    rs = np.array([float(e["r"]) for e in wiman_dict["radii"]])
    lm = np.array([e["log_m"] for e in wiman_dict["radii"]])
    lM = np.array([e["log_M"] for e in wiman_dict["radii"]])
    factor = math.cos(math.pi * wiman_dict["rho"]) - wiman_dict["epsilon"]
    ax.semilogx(rs, lM, "o-", label="log M_f(r)")
    ax.semilogx(rs, lm, "s-", label="log m_f(r)")
    ax.semilogx(rs, factor * lM, "--", color="gray",
                label=f"(cos pi rho - eps) log M, rho={wiman_dict['rho']:g}")
    ax.set_xlabel("r")
    ax.set_ylabel("log modulus")
    ax.legend(fontsize=8)
    return fig


def identity_errors_figure(identities: list[dict], title: str = "identity errors"):
    """Per-identity error against its tolerance, log scale."""
    fig, ax = _new_axes(title)
    labels, errs, tols, colors = [], [], [], []
    for i, r in enumerate(identities):
        labels.append(f"{r['identity_id']}#{i}")
        err = r["abs_err"] if r["abs_err"] == r["abs_err"] else 0.0  # NaN-safe
        errs.append(max(err, 1e-18))
        tols.append(max(float(r["tolerance"]), 1e-18))
        colors.append("tab:green" if r["pass"] else ("tab:orange" if r["xfail"] else "tab:red"))
    x = np.arange(len(labels))
    ax.bar(x, errs, color=colors, label="abs error")
    ax.plot(x, tols, "k_", markersize=14, label="tolerance")
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=75, fontsize=6)
    ax.set_ylabel("absolute error")
    ax.legend(fontsize=8)
    return fig
