"""Figure writers for the command-line reports.

Each function renders one diagnostic figure to a file next to the delimited
output it belongs with and returns the path. The Agg backend is forced so the
renderers work headless; nothing here ever opens a window. Figures are
best-effort diagnostics: the delimited files are the data of record, so the
command-line layer treats a failed render as a warning, not an error.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_defect_history(path, report, title="shooting convergence"):
    """Semilog defect-versus-iteration curve of one solve report."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    defects = np.asarray(report.defect_history, dtype=float)
    ax.semilogy(np.arange(defects.size), defects, marker="o", ms=3.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("periodicity defect")
    ax.set_title(f"{title} ({report.method})")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_sweep(path, reports, title="solver comparison"):
    """Overlay the defect histories of several solves on one axes.

    ``reports`` maps legend label to a solve report; iteration here means
    outer iterations, so methods with inner solves are compared by outer
    count, matching the delimited sweep table.
    """
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for label, report in reports.items():
        defects = np.asarray(report.defect_history, dtype=float)
        ax.semilogy(np.arange(defects.size), defects, label=label, lw=1.4)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("periodicity defect")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_multipliers(path, eigenvalues, title="Floquet multipliers"):
    """Leading multipliers in the complex plane against the unit circle."""
    eigenvalues = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    fig, ax = plt.subplots(figsize=(4.4, 4.4))
    angle = np.linspace(0.0, 2.0 * np.pi, 361)
    ax.plot(np.cos(angle), np.sin(angle), color="0.6", lw=1.0)
    ax.scatter(eigenvalues.real, eigenvalues.imag, s=36, zorder=3,
               facecolors="tab:blue", edgecolors="black", linewidths=0.6)
    lim = max(1.15, 1.1 * float(np.nanmax(np.abs(eigenvalues))))
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_grad_check(path, rows, title="gradient verification"):
    """Log-log relative finite-difference error versus step size.

    One curve per (qoi, param) pair, with a dashed second-order slope guide
    anchored to the largest step. The expected shape is a V: descent at
    order 2 until the adjoint-versus-roundoff floor, then a rise as
    cancellation takes over.
    """
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    pairs = sorted({(r.qoi, r.param) for r in rows})
    for q, p in pairs:
        pts = sorted(((r.tau, r.rel_error) for r in rows
                      if r.qoi == q and r.param == p), reverse=True)
        taus = np.array([t for t, _ in pts])
        errs = np.array([max(e, 1e-17) for _, e in pts])
        ax.loglog(taus, errs, marker="o", ms=3.5, label=f"F{q}, mu{p}")
    taus_all = np.array(sorted({r.tau for r in rows}, reverse=True))
    err_top = max(r.rel_error for r in rows if r.tau == taus_all[0])
    if err_top > 0.0:
        ax.loglog(taus_all, err_top * (taus_all / taus_all[0]) ** 2,
                  "k--", lw=0.9, label="slope 2")
    ax.invert_xaxis()
    ax.set_xlabel("step size tau")
    ax.set_ylabel("relative error vs adjoint")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if len(pairs) <= 12:  # per-pair legends drown wide parameter spaces
        ax.legend(fontsize=8)
    return _save(fig, path)


def plot_opt_history(path, history, title="design optimization"):
    """Objective and optimality traces of one optimization history."""
    fig, (ax_f, ax_g) = plt.subplots(2, 1, figsize=(5.2, 5.4), sharex=True)
    its = [it.iteration for it in history.iterates]
    ax_f.plot(its, history.objectives, marker="o", ms=3.5)
    ax_f.set_ylabel("objective")
    ax_f.grid(True, alpha=0.3)
    ax_f.set_title(title)
    ax_g.semilogy(its, history.optimalities, marker="o", ms=3.5,
                  label="optimality")
    n_con = len(history.iterates[0].constraints) if history.iterates else 0
    if n_con:
        viol = [max(abs(c) for c in it.constraints) for it in history.iterates]
        ax_g.semilogy(its, [max(v, 1e-17) for v in viol], marker="s", ms=3.5,
                      label="constraint violation")
        ax_g.legend(fontsize=8)
    ax_g.set_xlabel("accepted iterate")
    ax_g.set_ylabel("first-order measures")
    ax_g.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_trajectory(path, trajectory, title="periodic solution"):
    """Time traces of the state; large systems get a space-time image."""
    states = trajectory.states
    t = trajectory.grid.knots
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    if states.shape[1] <= 8:
        for j in range(states.shape[1]):
            ax.plot(t, states[:, j], lw=1.3, label=f"u{j}")
        ax.set_ylabel("state")
        ax.legend(fontsize=8)
    else:
        img = ax.imshow(states.T, aspect="auto", origin="lower",
                        extent=(t[0], t[-1], 0.0, 1.0), cmap="viridis")
        fig.colorbar(img, ax=ax, label="u")
        ax.set_ylabel("x")
    ax.set_xlabel("t")
    ax.set_title(title)
    return _save(fig, path)
