"""Shooting solvers for fully discrete time-periodic solutions.

All four solvers look for an initial state u0 with

    u^(Nt)(u0; mu) = u0,

where u^(Nt) is the DIRK evolution over one period, and report the defect
||u^(Nt)(u0) - u0||_2 at every outer iterate:

* fixed-point: u0 <- u^(Nt)(u0), converging at the spectral radius of the
  one-period sensitivity operator (only when it is contractive);
* Newton-Krylov: solves (d(u^(Nt))/du0 - I) du = u^(Nt)(u0) - u0 by
  matrix-free GMRES and updates u0 <- u0 - du, optionally nonlinearly
  preconditioned by a few fixed-point sweeps;
* optimization shooting: minimizes j(u0) = 1/2 ||u^(Nt)(u0) - u0||^2 by
  steepest descent or L-BFGS, with the exact gradient from one adjoint
  sweep per iterate;
* dual solve: the transposed problem for the periodic adjoint variables of
  one QoI, by GMRES or fixed-point iteration on the terminal dual state.

Reports count every primal evolution and every linearized (tangent or
adjoint) propagation actually performed.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from ._descent import minimize_descent
from .dirk import DEFAULT_STAGE_TOL, Trajectory, evolve
from .errors import DualSolveError, ShootingError
from .krylov import KrylovReport, LinearOperator, gmres
from .sensitivity import (
    StageOperators,
    _adjoint_sweep,
    adjoint_backward_evolve,
    adjoint_sensitivity_apply,
    forward_sensitivity_apply,
    qoi_sources,
)

MAX_NEWTON_STEP = 1e3


@dataclass
class SolveReport:
    """Instrumented record of one (primal or dual) periodic solve.

    ``defect_history`` holds the outer-iterate defects including the initial
    one, so ``iterations == len(defect_history) - 1`` for the outer methods.
    ``n_evolve`` counts primal evolutions over the period, ``n_sensitivity``
    counts linearized propagations (tangent or adjoint sweeps). Wall time is
    reported only here, never in CSV artifacts.
    """

    method: str
    converged: bool
    iterations: int
    defect_history: list = field(default_factory=list)
    precondition_defects: list = field(default_factory=list)
    inner_reports: list = field(default_factory=list)
    n_evolve: int = 0
    n_sensitivity: int = 0
    wall_time: float = 0.0
    status: str = ""


@dataclass
class PeriodicSolution:
    """A converged periodic initial state with its trajectory and report."""

    u0: np.ndarray
    trajectory: Trajectory
    defect: float
    report: SolveReport


def fixed_point_solve(model, tableau, grid, mu, u0_guess, tol=1e-10,
                      max_iter=2000, stage_tol=DEFAULT_STAGE_TOL):
    """Fixed-point (Picard) iteration on the one-period map.

    Each iteration costs exactly one evolution. Raises ShootingError with
    the defect history on max_iter exhaustion.
    """
    t0 = time.perf_counter()
    u0 = np.array(u0_guess, dtype=float)
    report = SolveReport(method="fixed-point", converged=False, iterations=0)
    for it in range(max_iter + 1):
        trajectory = evolve(model, tableau, grid, mu, u0, stage_tol=stage_tol)
        report.n_evolve += 1
        defect = float(np.linalg.norm(trajectory.final - u0))
        report.defect_history.append(defect)
        if defect <= tol:
            report.converged = True
            break
        if it == max_iter:
            break
        u0 = trajectory.final
    report.iterations = len(report.defect_history) - 1
    report.wall_time = time.perf_counter() - t0
    if not report.converged:
        report.status = "max-iter"
        raise ShootingError(
            f"fixed-point iteration stalled at defect {report.defect_history[-1]:.3e}"
            f" after {report.iterations} iterations", report)
    report.status = "converged"
    return PeriodicSolution(u0, trajectory, report.defect_history[-1], report)


def _precondition(model, tableau, grid, mu, u0, m, stage_tol, report):
    """m fixed-point sweeps used as a nonlinear preconditioner."""
    for _ in range(m):
        trajectory = evolve(model, tableau, grid, mu, u0, stage_tol=stage_tol)
        report.n_evolve += 1
        report.precondition_defects.append(float(np.linalg.norm(trajectory.final - u0)))
        u0 = trajectory.final
    return u0


def newton_krylov_solve(model, tableau, grid, mu, u0_guess, tol=1e-10,
                        eps_gmres=1e-3, m_precondition=0, max_newton=50,
                        stage_tol=DEFAULT_STAGE_TOL, stage_ops_tol=None):
    """Matrix-free Newton-GMRES on the periodicity residual.

    The Jacobian action v -> (d(u^(Nt))/du0) v - v is applied by one tangent
    propagation per GMRES iteration; GMRES runs at relative tolerance
    ``eps_gmres``, floored by the absolute target 0.3 * tol. The floor does
    not change which iterates are accepted (a linear residual of 0.3 * tol
    already lands the next defect under tol) but keeps the final inner solve
    from chasing eps_gmres * defect below what matrix-free stage solves can
    resolve. ``m_precondition`` fixed-point sweeps warm the start. Newton
    steps are capped at norm 1e3 as a safeguard against leaving the basin on
    hard problems.
    """
    t0 = time.perf_counter()
    report = SolveReport(method="newton", converged=False, iterations=0)
    u0 = np.array(u0_guess, dtype=float)
    u0 = _precondition(model, tableau, grid, mu, u0, m_precondition, stage_tol, report)
    ops_tol = stage_ops_tol if stage_ops_tol is not None else stage_tol
    for it in range(max_newton + 1):
        trajectory = evolve(model, tableau, grid, mu, u0, stage_tol=stage_tol)
        report.n_evolve += 1
        residual = trajectory.final - u0
        defect = float(np.linalg.norm(residual))
        report.defect_history.append(defect)
        if defect <= tol:
            report.converged = True
            break
        if it == max_newton:
            break
        ops = StageOperators(model, tableau, trajectory, mu, tol=ops_tol)

        def jac_apply(v):
            report.n_sensitivity += 1
            return forward_sensitivity_apply(
                model, tableau, trajectory, mu, v, operators=ops) - v

        du, krep = gmres(LinearOperator(model.dim, jac_apply), residual,
                         tol=eps_gmres, atol=0.3 * tol, max_iter=2 * model.dim)
        report.inner_reports.append(krep)
        step_norm = np.linalg.norm(du)
        if step_norm > MAX_NEWTON_STEP:
            du *= MAX_NEWTON_STEP / step_norm
        u0 = u0 - du
    report.iterations = len(report.defect_history) - 1
    report.wall_time = time.perf_counter() - t0
    if not report.converged:
        report.status = "max-iter"
        raise ShootingError(
            f"Newton-Krylov stalled at defect {report.defect_history[-1]:.3e}"
            f" after {report.iterations} iterations", report)
    report.status = "converged"
    return PeriodicSolution(u0, trajectory, report.defect_history[-1], report)


def optimization_shooting_solve(model, tableau, grid, mu, u0_guess, tol=1e-10,
                                method="l-bfgs", memory=10, max_iter=500,
                                m_precondition=0, stage_tol=DEFAULT_STAGE_TOL):
    """Minimize j(u0) = 1/2 ||u^(Nt)(u0) - u0||^2 down to defect ``tol``.

    The gradient dj/du0 = lambda^(0) - (u^(Nt) - u0) comes from one adjoint
    sweep seeded with lambda^(Nt) = u^(Nt) - u0 and no QoI sources, so each
    iterate costs one evolution plus one adjoint propagation (and one
    evolution per extra line-search trial).
    """
    if method not in ("l-bfgs", "steepest-descent"):
        raise ValueError(f"unknown optimization shooting method {method!r}")
    t0 = time.perf_counter()
    report = SolveReport(method=method, converged=False, iterations=0)
    u0 = np.array(u0_guess, dtype=float)
    u0 = _precondition(model, tableau, grid, mu, u0, m_precondition, stage_tol, report)
    cache = {}

    def fg(u0_trial):
        trajectory = evolve(model, tableau, grid, mu, u0_trial, stage_tol=stage_tol)
        report.n_evolve += 1
        residual = trajectory.final - u0_trial
        lam0 = adjoint_sensitivity_apply(model, tableau, trajectory, mu, residual,
                                         tol=stage_tol)
        report.n_sensitivity += 1
        cache["u0"] = np.array(u0_trial)
        cache["trajectory"] = trajectory
        cache["defect"] = float(np.linalg.norm(residual))
        return 0.5 * residual @ residual, lam0 - residual

    def stop(x, f, g):
        return np.sqrt(2.0 * max(f, 0.0)) <= tol

    def on_iterate(k, x, f, g):
        report.defect_history.append(float(np.sqrt(2.0 * max(f, 0.0))))

    result = minimize_descent(fg, u0, method=method, memory=memory,
                              max_iter=max_iter, stop=stop, on_iterate=on_iterate)
    report.iterations = result.iterations
    report.converged = result.status == "converged"
    report.status = result.status
    report.wall_time = time.perf_counter() - t0
    if not report.converged:
        raise ShootingError(
            f"optimization shooting ({method}) stopped with status "
            f"{result.status!r} at defect {report.defect_history[-1]:.3e}", report)
    if np.array_equal(cache.get("u0"), result.x):
        trajectory = cache["trajectory"]
        defect = cache["defect"]
    else:
        trajectory = evolve(model, tableau, grid, mu, result.x, stage_tol=stage_tol)
        report.n_evolve += 1
        defect = float(np.linalg.norm(trajectory.final - result.x))
    return PeriodicSolution(result.x, trajectory, defect, report)


def dual_solve(model, tableau, trajectory, mu, qoi_partials, qoi_index=0,
               method="gmres", dtol=1e-4, max_iter=400,
               stage_tol=DEFAULT_STAGE_TOL, operators=None, atol=None):
    """Solve the periodic dual problem of one QoI on a periodic trajectory.

    The unknown is the terminal dual state x = lambda^(Nt); periodicity of
    the adjoint demands

        lambda^(0)(x) = x - (dF/du^(Nt))^T,

    where lambda^(0)(x) is the backward sweep with the QoI sources. Since
    the sweep is affine in x, this is the linear system A x = b with
    A = P - I (P the source-free transposed one-period operator) and
    b = -(lambda^(0)(0) + (dF/du^(Nt))^T). GMRES applies A matrix-free with
    source-free sweeps; the fixed-point variant iterates
    x <- lambda^(0)(x) + (dF/du^(Nt))^T with one sourced sweep per iteration.
    Both stop at residual <= max(dtol * ||b||, atol).

    When the model's stage systems are themselves solved iteratively, each
    application of the dual operator carries noise on the order of the stage
    tolerance, so residuals below it are unattainable no matter how many
    iterations run. ``atol`` therefore defaults to 10 * stage_tol; models
    with direct stage solves may pass 0.0 to disable the floor.

    Returns (DualTrajectory, SolveReport); the trajectory is regenerated
    from the accepted terminal state so its stage duals are consistent.
    """
    if method not in ("gmres", "fixed-point"):
        raise ValueError(f"unknown dual solve method {method!r}")
    if atol is None:
        atol = 0.0 if model.has_dense_jacobian else 10.0 * stage_tol
    t0 = time.perf_counter()
    ops = operators if operators is not None else StageOperators(
        model, tableau, trajectory, mu, tol=stage_tol)
    report = SolveReport(method=f"dual-{method}", converged=False, iterations=0)
    d_state, d_stage = qoi_sources(qoi_partials, qoi_index)
    df_dufinal = qoi_partials.d_state[-1, qoi_index]
    zero = np.zeros(model.dim)

    def sourced_sweep(lam_final):
        report.n_sensitivity += 1
        return _adjoint_sweep(model, tableau, trajectory, mu, lam_final,
                              d_state, d_stage, stage_tol, ops, store=False)

    rhs = -(sourced_sweep(zero) + df_dufinal)
    rhs_norm = np.linalg.norm(rhs)

    if method == "gmres":
        def dual_apply(v):
            report.n_sensitivity += 1
            return adjoint_sensitivity_apply(
                model, tableau, trajectory, mu, v, operators=ops) - v

        lam_final, krep = gmres(LinearOperator(model.dim, dual_apply), rhs,
                                tol=dtol, atol=atol, max_iter=2 * model.dim)
        report.inner_reports.append(krep)
        report.defect_history = list(krep.residual_history)
        report.iterations = krep.iterations
        report.converged = krep.converged
    else:
        target = max(dtol * rhs_norm, atol)
        lam_final = zero
        for it in range(max_iter + 1):
            image = sourced_sweep(lam_final) + df_dufinal
            defect = float(np.linalg.norm(image - lam_final))
            report.defect_history.append(defect)
            if defect <= target:
                report.converged = True
                break
            if it == max_iter:
                break
            lam_final = image
        report.iterations = len(report.defect_history) - 1
    report.wall_time = time.perf_counter() - t0
    if not report.converged:
        report.status = "max-iter"
        raise DualSolveError(
            f"dual {method} solve stalled at residual "
            f"{report.defect_history[-1]:.3e} "
            f"(target {max(dtol * rhs_norm, atol):.3e})", report)
    report.status = "converged"
    dual = adjoint_backward_evolve(model, tableau, trajectory, mu, lam_final,
                                   qoi_partials=qoi_partials, qoi_index=qoi_index,
                                   tol=stage_tol, operators=ops)
    report.n_sensitivity += 1
    return dual, report
