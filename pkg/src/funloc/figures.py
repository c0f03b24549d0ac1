"""Figure rendering for study reports (file output only, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import RateStudyResult

__all__ = ["render_rate_study"]

_STYLE = {"main": dict(color="C0", marker="o", label="local polynomial"),
          "baseline": dict(color="C3", marker="s", label="locally constant (K=1)")}


def render_rate_study(result: RateStudyResult, path: str, dpi: int = 150):
    """Log-log median squared error against n, one line per arm, slopes in the legend."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for arm, kappa in (("main", result.kappa_hat),
                       ("baseline", result.baseline_kappa_hat)):
        rows = [r for r in result.per_n if r["arm"] == arm and r["median_sq_err"] > 0]
        if not rows:
            continue
        ns = np.array([r["n"] for r in rows], dtype=float)
        errs = np.array([r["median_sq_err"] for r in rows])
        style = _STYLE[arm]
        ax.loglog(ns, errs, linestyle="-", **style)
        # fitted power law through the geometric center
        anchor = np.exp(np.mean(np.log(errs)) + kappa * (np.mean(np.log(ns))))
        ax.loglog(ns, anchor * ns ** (-kappa), linestyle="--", color=style["color"],
                  alpha=0.5, label=f"slope fit: {kappa:.3f}")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("median squared error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
