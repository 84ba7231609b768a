"""Artifact writers and readers: delimited text, binary state dumps, manifests.

All writers are deterministic: floats are rendered with 17 significant
digits (enough to round-trip IEEE doubles exactly), field order is fixed,
newlines are '\\n' on every platform, and nothing time- or host-dependent is
ever written. Repeated runs of the same computation therefore produce
bitwise-identical files.

The binary dump stores a full trajectory at working precision: a header of
three little-endian int64 values (N_u, N_t, s), the N_t + 1 grid knots, and
then the step-major payload u^(0), (k_0 .. k_{s-1}, u^(n+1)) for each step,
all little-endian float64.
"""

import csv
import json

import numpy as np

from .dirk import TimeGrid, Trajectory

_HEADER_DTYPE = np.dtype("<i8")
_PAYLOAD_DTYPE = np.dtype("<f8")


def fmt(x):
    """Render one float with 17 significant digits."""
    return format(float(x), ".17g")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_trajectory_csv(path, trajectory):
    """One row per time knot: n, t and the state components."""
    dim = trajectory.states.shape[1]
    header = ["n", "t"] + [f"u{j}" for j in range(dim)]
    rows = [
        [n, fmt(t)] + [fmt(x) for x in state]
        for n, (t, state) in enumerate(zip(trajectory.grid.knots, trajectory.states))
    ]
    _write_rows(path, header, rows)


def write_solution_binary(path, trajectory):
    """Dump a trajectory, stages included, to the flat binary layout."""
    states, stages = trajectory.states, trajectory.stages
    n_steps, s, dim = stages.shape
    with open(path, "wb") as fh:
        np.array([dim, n_steps, s], dtype=_HEADER_DTYPE).tofile(fh)
        np.asarray(trajectory.grid.knots, dtype=_PAYLOAD_DTYPE).tofile(fh)
        np.asarray(states[0], dtype=_PAYLOAD_DTYPE).tofile(fh)
        for n in range(n_steps):
            np.asarray(stages[n], dtype=_PAYLOAD_DTYPE).tofile(fh)
            np.asarray(states[n + 1], dtype=_PAYLOAD_DTYPE).tofile(fh)


def read_solution_binary(path):
    """Inverse of write_solution_binary; returns a Trajectory."""
    with open(path, "rb") as fh:
        dim, n_steps, s = (int(v) for v in np.fromfile(fh, dtype=_HEADER_DTYPE, count=3))
        knots = np.fromfile(fh, dtype=_PAYLOAD_DTYPE, count=n_steps + 1)
        payload = np.fromfile(fh, dtype=_PAYLOAD_DTYPE)
    expected = dim + n_steps * (s + 1) * dim
    if payload.size != expected:
        raise ValueError(
            f"truncated solution dump: expected {expected} payload values, "
            f"found {payload.size}")
    states = np.empty((n_steps + 1, dim))
    stages = np.empty((n_steps, s, dim))
    states[0] = payload[:dim]
    offset = dim
    block = (s + 1) * dim
    for n in range(n_steps):
        chunk = payload[offset:offset + block]
        stages[n] = chunk[: s * dim].reshape(s, dim)
        states[n + 1] = chunk[s * dim:]
        offset += block
    return Trajectory(grid=TimeGrid(knots), states=states, stages=stages)


def write_dual_csv(path, dual):
    """One row per time knot: n, t and the adjoint state components."""
    dim = dual.lambdas.shape[1]
    header = ["n", "t"] + [f"lambda{j}" for j in range(dim)]
    rows = [
        [n, fmt(t)] + [fmt(x) for x in lam]
        for n, (t, lam) in enumerate(zip(dual.grid.knots, dual.lambdas))
    ]
    _write_rows(path, header, rows)


def write_sweep_csv(path, rows):
    """Solver-comparison matrix, one row per (method, tol, m) cell.

    ``rows`` are mappings with the listed fields; failed cells carry their
    final defect and converged=False rather than aborting the table.
    """
    header = ["method", "tol", "m_precondition", "converged", "iterations",
              "n_evolve", "n_sensitivity", "final_defect"]
    out = [
        [r["method"], fmt(r["tol"]), r["m_precondition"],
         str(bool(r["converged"])).lower(), r["iterations"], r["n_evolve"],
         r["n_sensitivity"], fmt(r["final_defect"])]
        for r in rows
    ]
    _write_rows(path, header, out)


def write_report_csv(path, report):
    """Defect history of a primal or dual solve, one row per outer iterate.

    The inner-iteration column holds the Krylov iteration count of the
    corresponding outer step for Newton-type solves and is empty for methods
    without an inner solver.
    """
    inner = {}
    for idx, krep in enumerate(report.inner_reports):
        inner[idx] = krep.iterations
    rows = []
    for it, defect in enumerate(report.defect_history):
        # Inner solve idx-1 produced iterate idx; iterate 0 is the guess.
        rows.append([it, fmt(defect),
                     inner.get(it - 1, "") if report.inner_reports else ""])
    _write_rows(path, ["iteration", "defect", "inner_iterations"], rows)


def write_krylov_csv(path, report):
    """Residual history of one Krylov solve, one row per iteration."""
    rows = [[it, fmt(res)] for it, res in enumerate(report.residual_history)]
    _write_rows(path, ["iteration", "residual"], rows)


def write_qoi_csv(path, values):
    """QoI values, one row per functional."""
    rows = [[q, fmt(v)] for q, v in enumerate(np.atleast_1d(values))]
    _write_rows(path, ["qoi", "value"], rows)


def write_gradient_csv(path, gradient):
    """Total and explicit parameter derivatives, one row per (qoi, param)."""
    rows = []
    n_qoi, n_params = gradient.values.shape
    for q in range(n_qoi):
        for p in range(n_params):
            rows.append([q, p, fmt(gradient.values[q, p]),
                         fmt(gradient.explicit[q, p])])
    _write_rows(path, ["qoi", "param", "value", "explicit_value"], rows)


def write_grad_check_csv(path, rows):
    """Finite-difference verification table, one row per (qoi, param, tau)."""
    out = [
        [r.qoi, r.param, fmt(r.tau), fmt(r.fd_value), fmt(r.adjoint_value),
         fmt(r.rel_error)]
        for r in rows
    ]
    _write_rows(path, ["qoi", "param", "tau", "fd_value", "adjoint_value",
                       "rel_error"], out)


def write_eigenvalues_csv(path, eigenvalues, residuals=None):
    """Leading eigenvalues, one row per mode, with |.| and residual norms."""
    eigenvalues = np.atleast_1d(eigenvalues)
    rows = []
    for idx, lam in enumerate(eigenvalues):
        res = "" if residuals is None else fmt(residuals[idx])
        rows.append([idx, fmt(lam.real), fmt(lam.imag), fmt(abs(lam)), res])
    _write_rows(path, ["index", "re", "im", "modulus", "residual"], rows)


def write_opt_history_csv(path, history):
    """Optimization iterates, one row per accepted iterate."""
    n_cons = len(history.iterates[0].constraints) if history.iterates else 0
    n_mu = len(history.iterates[0].mu) if history.iterates else 0
    header = (["iteration", "outer", "objective"]
              + [f"constraint{j}" for j in range(n_cons)]
              + ["optimality", "penalty"]
              + [f"multiplier{j}" for j in range(n_cons)]
              + ["defect"]
              + [f"mu{j}" for j in range(n_mu)])
    rows = []
    for it in history.iterates:
        rows.append([it.iteration, it.outer, fmt(it.objective)]
                    + [fmt(c) for c in it.constraints]
                    + [fmt(it.optimality), fmt(it.penalty)]
                    + [fmt(m) for m in it.multipliers]
                    + [fmt(it.defect)]
                    + [fmt(m) for m in it.mu])
    _write_rows(path, header, rows)


def write_manifest(path, manifest):
    """Sorted-key JSON manifest with a trailing newline."""
    with open(path, "w", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
