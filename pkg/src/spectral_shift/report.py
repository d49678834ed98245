"""Figure rendering for sweep reports.

Two PNGs are written next to the delimited sweep output:

* ``shift_vs_eps.png`` - log-log plot of |shift| and |shift - predicted|
  against eps, with the fitted convergence rate overlaid when available;
* ``corrector_norms.png`` - corrector energy/mass norm and the smallness and
  eigenfunction ratios across the schedule.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import InsufficientDataError
from .sweep import SweepTable, fit_rate


def render_figures(table: SweepTable, out_dir) -> list[str]:
    """Write the report figures; return the file names created."""
    written = []
    written.append(_shift_figure(table, out_dir))
    written.append(_norms_figure(table, out_dir))
    return written


def _loglog_series(ax, eps, values, label, marker):
    mask = np.abs(values) > 0
    if mask.any():
        ax.loglog(eps[mask], np.abs(values[mask]), marker, label=label)


def _shift_figure(table: SweepTable, out_dir) -> str:
    eps = table.column("eps")
    shift = table.column("shift")
    remainder = shift - table.column("predicted_shift")
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    _loglog_series(ax, eps, shift, "|shift|", "o-")
    _loglog_series(ax, eps, remainder, "|shift - predicted|", "s--")
    try:
        fit = fit_rate(eps, shift)
        ax.loglog(eps, fit.predict(eps), "k:", label=f"slope {fit.slope:.2f}")
    except InsufficientDataError:
        pass
    ax.set_xlabel("eps")
    ax.set_ylabel("eigenvalue shift")
    ax.set_title(f"{table.spec.kind}: shift vs eps (lambda0 = {table.lambda0:.4g})")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    path = f"{out_dir}/shift_vs_eps.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return "shift_vs_eps.png"


def _norms_figure(table: SweepTable, out_dir) -> str:
    eps = table.column("eps")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    _loglog_series(ax1, eps, table.column("corrector_energy"), "E(V)", "o-")
    _loglog_series(ax1, eps, table.column("corrector_mass_norm"), "||V||", "s--")
    capacity = table.column("capacity")
    _loglog_series(ax1, eps, capacity, "capacity", "d-.")
    ax1.set_xlabel("eps")
    ax1.set_title("corrector norms")
    ax1.legend()
    ax1.grid(True, which="both", alpha=0.3)

    ax2.semilogx(eps, table.column("smallness_ratio"), "o-", label="||V||^2 / E(V)")
    ax2.semilogx(
        eps, table.column("eigenfunction_ratio"), "s--",
        label="E(phi0 - phi_eps) / E(V)",
    )
    ax2.set_xlabel("eps")
    ax2.set_title("diagnostic ratios")
    ax2.legend()
    ax2.grid(True, which="both", alpha=0.3)
    fig.suptitle(f"{table.spec.kind} sweep diagnostics")
    path = f"{out_dir}/corrector_norms.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return "corrector_norms.png"
