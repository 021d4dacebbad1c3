"""Static PNG summaries of experiment CSV rows."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import ExperimentResult  # noqa: E402

AXIS_LABELS = {"mean": "mean degree", "m": "mask fraction m", "T": "baseline T",
               "exponent": "power-law exponent"}


def _col(rows, key):
    return [float(r[key]) if r.get(key, "") != "" else float("nan") for r in rows]


def _sim_points(ax, x, rows, prefix, value, err, label, color):
    if not rows or prefix + value not in rows[0]:
        return
    ax.errorbar(x, _col(rows, prefix + value), yerr=_col(rows, prefix + err), fmt="o", ms=4,
                capsize=2, color=color, label=label)


def render(result: ExperimentResult, path: str | Path | None = None) -> Path:
    """Draw the figure for ``result`` and return its path (default: CSV path with ``.png``)."""
    spec, rows = result.spec, result.rows
    path = Path(path) if path is not None else result.csv_path.with_suffix(".png")
    x = [float(r["value"]) for r in rows]
    xlabel = AXIS_LABELS.get(spec.axis, spec.axis)

    if spec.kind == "threshold":
        fig, ax = plt.subplots(figsize=(5.5, 4))
        ax.plot(x, _col(rows, "critical_analytic"), "-", color="k", label="analytic")
        if rows and "critical_empirical" in rows[0]:
            ax.plot(x, _col(rows, "critical_empirical"), "s", color="tab:red", label="simulated")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(f"critical {AXIS_LABELS.get(spec.threshold_axis, spec.threshold_axis)}")
        ax.legend()
        ax.grid(alpha=0.3)
    else:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
        ax1.plot(x, _col(rows, "emerge_mixed"), "-", color="tab:red", label="random patient zero")
        ax1.plot(x, _col(rows, "emerge_masked"), "--", color="tab:green", label="masked patient zero")
        ax1.plot(x, _col(rows, "emerge_unmasked"), ":", color="tab:blue", label="unmasked patient zero")
        ax2.plot(x, _col(rows, "S"), "-", color="tab:red", label="total")
        ax2.plot(x, _col(rows, "S1_share"), "--", color="tab:green", label="masked")
        ax2.plot(x, _col(rows, "S2_share"), ":", color="tab:blue", label="unmasked")
        if spec.kind == "mutation_compare":
            ax2.plot(x, _col(rows, "mut_total"), "-.", color="k", label="mutation model")
        if spec.kind == "T_sweep":
            for policy, color in (("random", "tab:red"), ("masked", "tab:green"),
                                  ("unmasked", "tab:blue")):
                pre = f"sim_p0_{policy}_"
                _sim_points(ax1, x, rows, pre, "emergence_freq", "emergence_se", None, color)
                _sim_points(ax2, x, rows, pre, "size_mean", "size_se", None, color)
        else:
            _sim_points(ax1, x, rows, "sim_", "emergence_freq", "emergence_se", "simulated", "k")
            _sim_points(ax2, x, rows, "sim_", "size_mean", "size_se", "simulated", "k")
        ax1.set_ylabel("probability of emergence")
        ax2.set_ylabel("fraction infected (given emergence)")
        for ax in (ax1, ax2):
            ax.set_xlabel(xlabel)
            ax.set_ylim(-0.02, 1.02)
            ax.grid(alpha=0.3)
            ax.legend(fontsize=8)
    fig.suptitle(spec.name)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
