"""Exact parameter gradients of QoIs on the manifold of periodic solutions.

Once the primal periodic solve and the periodic dual of QoI q are available,
the total derivative along the manifold reduces to the explicit part plus
the stage-dual weighted parameter sensitivities of the residual:

    dF_q/dmu = pF_q/pmu + sum_n dt_n sum_i (dr/dmu at u_i^(n))^T kappa_i^(n),

evaluated entirely with transpose actions; no forward parameter sensitivity
is ever propagated, so the cost is independent of the number of parameters.
"""

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from .dirk import DEFAULT_STAGE_TOL, accumulate_qoi, evolve
from .errors import GradientError, OracleError, SolverError
from .sensitivity import StageOperators
from .shooting import SolveReport, dual_solve, newton_krylov_solve


@dataclass
class ManifoldGradient:
    """Total QoI derivatives on the periodic-solution manifold.

    ``values[q, p]`` is dF_q/dmu_p. ``explicit[q, p]`` is the pF_q/pmu part
    (from the quadrature alone), kept for diagnostics.
    """

    values: np.ndarray
    explicit: np.ndarray


@dataclass
class GradientReports:
    """Reports of the solves behind one gradient evaluation."""

    primal: SolveReport
    duals: list = field(default_factory=list)
    u0: np.ndarray = None
    defect: float = 0.0


@dataclass
class GradCheckRow:
    """One line of the finite-difference verification table."""

    qoi: int
    param: int
    tau: float
    fd_value: float
    adjoint_value: float
    rel_error: float


@dataclass
class LinearOracle:
    """Dense one-period affine map u^(Nt) = phi u0 + affine and its fixed point."""

    phi: np.ndarray
    affine: np.ndarray
    u0: np.ndarray

    def eigenvalues(self):
        """Dense monodromy eigenvalues, descending modulus."""
        vals = np.linalg.eigvals(self.phi)
        return vals[np.lexsort((-vals.imag, -np.abs(vals)))]


def periodic_gradient(model, tableau, grid, mu, qoi, primal_tol=1e-10,
                      dual_tol=1e-10, u0_guess=None, eps_gmres=1e-3,
                      m_precondition=0, max_newton=50, dual_method="gmres",
                      stage_tol=DEFAULT_STAGE_TOL, workers=1):
    """Periodic solve, QoI evaluation, dual solves and gradient assembly.

    Returns (QoiValue, ManifoldGradient, GradientReports). Failures are
    wrapped in GradientError labeled with the phase that failed: 'primal',
    'qoi', 'dual' or 'assembly'.
    """
    mu = np.asarray(mu, dtype=float)
    if u0_guess is None:
        u0_guess = np.zeros(model.dim)
    try:
        solution = newton_krylov_solve(
            model, tableau, grid, mu, u0_guess, tol=primal_tol,
            eps_gmres=eps_gmres, m_precondition=m_precondition,
            max_newton=max_newton, stage_tol=stage_tol)
    except SolverError as err:
        raise GradientError(f"primal periodic solve failed: {err}", "primal", err)
    trajectory = solution.trajectory
    try:
        qoi_value = accumulate_qoi(model, qoi, tableau, trajectory, mu)
    except Exception as err:
        raise GradientError(f"QoI accumulation failed: {err}", "qoi", err)

    ops = StageOperators(model, tableau, trajectory, mu, tol=stage_tol)

    def one_dual(q):
        return dual_solve(model, tableau, trajectory, mu, qoi_value,
                          qoi_index=q, method=dual_method, dtol=dual_tol,
                          stage_tol=stage_tol, operators=ops)

    try:
        if workers > 1 and qoi.n_qoi > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one_dual, range(qoi.n_qoi)))
        else:
            results = [one_dual(q) for q in range(qoi.n_qoi)]
    except SolverError as err:
        raise GradientError(f"periodic dual solve failed: {err}", "dual", err)
    duals = [r[0] for r in results]
    dual_reports = [r[1] for r in results]

    try:
        values = np.array(qoi_value.d_mu, dtype=float)
        dts = grid.dt
        for n in range(grid.n_steps):
            for i in range(tableau.n_stages):
                u_i = ops.u_stage[n, i]
                t_i = ops.t_stage[n, i]
                for q in range(qoi.n_qoi):
                    values[q] += dts[n] * model.jac_mu_apply_transpose(
                        u_i, mu, t_i, duals[q].stage_duals[n, i])
    except Exception as err:
        raise GradientError(f"gradient assembly failed: {err}", "assembly", err)
    gradient = ManifoldGradient(values=values, explicit=np.array(qoi_value.d_mu))
    reports = GradientReports(primal=solution.report, duals=dual_reports,
                              u0=solution.u0, defect=solution.defect)
    return qoi_value, gradient, reports


def grad_check(model, tableau, grid, mu, qoi, taus=(1e-4, 1e-5, 1e-6, 1e-7, 1e-8),
               primal_tol=1e-12, dual_tol=1e-12, u0_guess=None, workers=1,
               **solver_opts):
    """Verify the adjoint gradient against central finite differences.

    For every parameter p and step size tau, the QoIs are re-evaluated on
    fully converged periodic solutions at mu +/- tau e_p (warm-started from
    the base solution) and compared entry by entry with the adjoint
    gradient. Requires primal_tol <= 1e-12 so the finite differences are not
    polluted by solver noise.

    Returns (rows, gradient, reports) where rows is a flat list of
    GradCheckRow over (qoi, param, tau).
    """
    taus = [float(t) for t in taus]
    if any(t <= 0.0 for t in taus):
        raise ValueError("tau values must be positive")
    if primal_tol > 1e-12:
        raise ValueError("grad_check requires primal_tol <= 1e-12")
    mu = np.asarray(mu, dtype=float)
    qoi_value, gradient, reports = periodic_gradient(
        model, tableau, grid, mu, qoi, primal_tol=primal_tol,
        dual_tol=dual_tol, u0_guess=u0_guess, workers=workers, **solver_opts)

    def perturbed_values(args):
        p, tau, sign = args
        mu_p = mu.copy()
        mu_p[p] += sign * tau
        sol = newton_krylov_solve(
            model, tableau, grid, mu_p, reports.u0, tol=primal_tol,
            stage_tol=solver_opts.get("stage_tol", DEFAULT_STAGE_TOL),
            eps_gmres=solver_opts.get("eps_gmres", 1e-3),
            max_newton=solver_opts.get("max_newton", 50))
        return accumulate_qoi(model, qoi, tableau, sol.trajectory, mu_p).values

    tasks = [(p, tau, sign) for p in range(model.n_params) for tau in taus
             for sign in (1.0, -1.0)]
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(perturbed_values, tasks))
    else:
        outcomes = [perturbed_values(t) for t in tasks]
    lookup = {(p, tau, sign): f for (p, tau, sign), f in zip(tasks, outcomes)}

    rows = []
    for q in range(qoi.n_qoi):
        for p in range(model.n_params):
            for tau in taus:
                fd = (lookup[(p, tau, 1.0)][q] - lookup[(p, tau, -1.0)][q]) / (2.0 * tau)
                adj = gradient.values[q, p]
                rel = abs(fd - adj) / max(abs(adj), 1e-300)
                rows.append(GradCheckRow(q, p, tau, float(fd), float(adj), float(rel)))
    return rows, gradient, reports


def dense_oracle_linear(model, tableau, grid, mu, stage_tol=1e-13):
    """Assemble the exact discrete one-period affine map of a linear model.

    Evolving the zero state gives the affine part c; evolving each canonical
    basis vector and subtracting c gives the columns of the monodromy matrix
    phi. The exact discrete periodic initial state solves (I - phi) u0 = c.
    Raises OracleError (carrying phi and c) when I - phi is numerically
    singular, e.g. for neutrally stable dynamics.
    """
    mu = np.asarray(mu, dtype=float)
    dim = model.dim
    affine = evolve(model, tableau, grid, mu, np.zeros(dim), stage_tol=stage_tol).final
    phi = np.empty((dim, dim))
    eye = np.eye(dim)
    for j in range(dim):
        phi[:, j] = evolve(model, tableau, grid, mu, eye[j],
                           stage_tol=stage_tol).final - affine
    shifted = eye - phi
    sigma = np.linalg.svd(shifted, compute_uv=False)
    if sigma[-1] <= 1e-12 * max(sigma[0], 1.0):
        raise OracleError("I - phi is numerically singular (neutrally stable "
                          "one-period map); no isolated periodic solution",
                          phi=phi, affine=affine)
    u0 = np.linalg.solve(shifted, affine)
    return LinearOracle(phi=phi, affine=affine, u0=u0)
