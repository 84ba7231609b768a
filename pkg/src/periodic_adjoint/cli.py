"""Command-line interface: configured runs that leave auditable artifacts.

Every subcommand reads one YAML configuration, performs one computation, and
writes its results into an output directory: delimited tables (the data of
record), a ``manifest.json`` echoing the full configuration alongside library
versions and wall-clock timings, and diagnostic figures. Figures and the
manifest may vary between runs (timings); the delimited tables are written
through deterministic formatters so repeated runs of the same configuration
produce bitwise-identical tables.

Exit codes: 0 on success, 1 when the numerics fail (a solver did not
converge), 2 when the configuration or invocation is malformed. Defaults for
the output directory and worker count can also come from the ``PA_OUT`` and
``PA_WORKERS`` environment variables; command-line flags win over the
environment, which wins over the configuration file.
"""

import argparse
import os
import platform
import sys
import time

import matplotlib
import numpy as np
import scipy
import yaml

from . import __version__
from .config import (
    build_grid,
    build_model,
    build_tableau,
    load_config,
    parse_config,
    resolve_guess,
    resolve_mu,
)
from .dirk import accumulate_qoi
from .driver import OptProblem, optimize
from .errors import ConfigError, ShootingError, SolverError
from .floquet import analyze_stability
from .gradient import grad_check, periodic_gradient
from .shooting import (
    dual_solve,
    fixed_point_solve,
    newton_krylov_solve,
    optimization_shooting_solve,
)
from . import io, plots


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pa",
        description="Periodic solutions, adjoint gradients and stability "
                    "of semi-discrete evolution equations.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    specs = (
        ("solve-periodic", "solve for a periodic initial state"),
        ("adjoint", "solve the periodic dual problem of every QoI"),
        ("gradient", "assemble exact QoI parameter gradients"),
        ("grad-check", "verify the gradients against finite differences"),
        ("floquet", "estimate dominant Floquet multipliers"),
        ("optimize", "run the constrained design optimization"),
        ("sweep", "compare shooting solvers over a method/tolerance matrix"),
    )
    for name, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH",
                       help="YAML run configuration (defaults apply if omitted)")
        p.add_argument("--out", metavar="DIR",
                       help="artifact directory (default: $PA_OUT or ./pa_out)")
        p.add_argument("--workers", type=int, metavar="N",
                       help="parallel workers for independent solves "
                            "(default: $PA_WORKERS or the config value)")
        p.add_argument("--seed", type=int, metavar="N",
                       help="run seed; also overrides the random-model seed")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
    return parser


def _resolve(args):
    """Merge config file, environment and flags into one RunConfig."""
    cfg = load_config(args.config) if args.config else parse_config({})
    env_out = os.environ.get("PA_OUT")
    env_workers = os.environ.get("PA_WORKERS")
    if env_workers is not None:
        try:
            cfg.workers = int(env_workers)
        except ValueError:
            raise ConfigError(f"PA_WORKERS: expected an integer, got {env_workers!r}")
    if env_out:
        cfg.out = env_out
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.model.seed = args.seed
    if cfg.out is None:
        cfg.out = "pa_out"
    if cfg.workers < 1:
        raise ConfigError(f"workers: must be at least 1, got {cfg.workers}")
    return cfg


class _Run:
    """Shared state of one subcommand run: config, output dir, manifest."""

    def __init__(self, command, cfg, render_plots):
        self.command = command
        self.cfg = cfg
        self.render_plots = render_plots
        self.outdir = cfg.out
        os.makedirs(self.outdir, exist_ok=True)
        self.artifacts = []
        self.timings = {}
        self.results = {}
        self._t0 = time.perf_counter()

    def path(self, name):
        self.artifacts.append(name)
        return os.path.join(self.outdir, name)

    def figure(self, name, renderer, *args, **kwargs):
        """Render one figure; failures degrade to a warning on stderr."""
        if not self.render_plots:
            return
        try:
            renderer(os.path.join(self.outdir, name), *args, **kwargs)
            self.artifacts.append(name)
        except Exception as err:  # diagnostics only, never fatal
            print(f"warning: could not render {name}: {err}", file=sys.stderr)

    def time_phase(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timings[name] = time.perf_counter() - t0
        return out

    def finish(self):
        self.timings["total"] = time.perf_counter() - self._t0
        manifest = {
            "command": self.command,
            "config": self.cfg.to_dict(),
            "versions": {
                "periodic-adjoint": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "matplotlib": matplotlib.__version__,
                "pyyaml": yaml.__version__,
            },
            "timings": self.timings,
            "results": self.results,
            "artifacts": sorted(self.artifacts),
        }
        io.write_manifest(os.path.join(self.outdir, "manifest.json"), manifest)
        print(f"{self.command}: wrote {len(self.artifacts) + 1} artifacts to "
              f"{self.outdir}")


def _primal_solve(cfg, model, tableau, grid, mu, guess):
    """Dispatch the configured shooting method."""
    sh = cfg.shooting
    if sh.method == "newton-krylov":
        return newton_krylov_solve(
            model, tableau, grid, mu, guess, tol=sh.tol,
            eps_gmres=sh.eps_gmres, m_precondition=sh.m_precondition,
            max_newton=sh.max_iter, stage_tol=sh.stage_tol)
    if sh.method == "fixed-point":
        return fixed_point_solve(model, tableau, grid, mu, guess, tol=sh.tol,
                                 max_iter=sh.max_iter, stage_tol=sh.stage_tol)
    return optimization_shooting_solve(
        model, tableau, grid, mu, guess, tol=sh.tol, method=sh.method,
        max_iter=sh.max_iter, m_precondition=sh.m_precondition,
        stage_tol=sh.stage_tol)


def _setup(cfg):
    model, qoi = build_model(cfg)
    tableau = build_tableau(cfg)
    grid = build_grid(cfg, model)
    mu = resolve_mu(cfg, model)
    return model, qoi, tableau, grid, mu


def _write_solution(run, model, qoi, tableau, solution, mu):
    io.write_trajectory_csv(run.path("solution.csv"), solution.trajectory)
    io.write_solution_binary(run.path("solution.bin"), solution.trajectory)
    io.write_report_csv(run.path("shooting_report.csv"), solution.report)
    values = accumulate_qoi(model, qoi, tableau, solution.trajectory, mu).values
    io.write_qoi_csv(run.path("qoi.csv"), values)
    run.results["defect"] = solution.defect
    run.results["iterations"] = solution.report.iterations
    run.results["n_evolve"] = solution.report.n_evolve
    run.results["n_sensitivity"] = solution.report.n_sensitivity
    run.results["qoi"] = [float(v) for v in values]
    run.figure("convergence.png", plots.plot_defect_history, solution.report)
    run.figure("trajectory.png", plots.plot_trajectory, solution.trajectory)
    return values


def _cmd_solve_periodic(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    guess = resolve_guess(cfg, model)
    solution = run.time_phase("solve", _primal_solve, cfg, model, tableau,
                              grid, mu, guess)
    _write_solution(run, model, qoi, tableau, solution, mu)
    print(f"  defect {solution.defect:.3e} after "
          f"{solution.report.iterations} iterations")


def _cmd_adjoint(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    guess = resolve_guess(cfg, model)
    solution = run.time_phase("solve", _primal_solve, cfg, model, tableau,
                              grid, mu, guess)
    _write_solution(run, model, qoi, tableau, solution, mu)
    qoi_value = accumulate_qoi(model, qoi, tableau, solution.trajectory, mu)

    t0 = time.perf_counter()
    dual_reports = {}
    iterations = []
    for q in range(qoi.n_qoi):
        dual, report = dual_solve(
            model, tableau, solution.trajectory, mu, qoi_value, qoi_index=q,
            method=cfg.dual.method, dtol=cfg.dual.tol,
            max_iter=cfg.dual.max_iter, stage_tol=cfg.shooting.stage_tol)
        io.write_dual_csv(run.path(f"dual_state_q{q}.csv"), dual)
        io.write_report_csv(run.path(f"dual_report_q{q}.csv"), report)
        dual_reports[f"F{q}"] = report
        iterations.append(report.iterations)
    run.timings["dual"] = time.perf_counter() - t0
    run.results["dual_iterations"] = iterations
    run.figure("dual_convergence.png", plots.plot_sweep, dual_reports,
               title="periodic dual convergence")
    print(f"  dual solves converged in {iterations} iterations")


def _cmd_gradient(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    guess = resolve_guess(cfg, model)
    qoi_value, gradient, reports = run.time_phase(
        "gradient", periodic_gradient, model, tableau, grid, mu, qoi,
        primal_tol=cfg.shooting.tol, dual_tol=cfg.dual.tol,
        u0_guess=guess, eps_gmres=cfg.shooting.eps_gmres,
        m_precondition=cfg.shooting.m_precondition,
        max_newton=cfg.shooting.max_iter, dual_method=cfg.dual.method,
        stage_tol=cfg.shooting.stage_tol, workers=cfg.workers)
    io.write_qoi_csv(run.path("qoi.csv"), qoi_value.values)
    io.write_gradient_csv(run.path("gradient.csv"), gradient)
    io.write_report_csv(run.path("shooting_report.csv"), reports.primal)
    for q, report in enumerate(reports.duals):
        io.write_report_csv(run.path(f"dual_report_q{q}.csv"), report)
    run.results["defect"] = reports.defect
    run.results["qoi"] = [float(v) for v in qoi_value.values]
    run.results["gradient"] = [[float(g) for g in row]
                               for row in gradient.values]
    run.figure("convergence.png", plots.plot_defect_history, reports.primal)
    print(f"  gradient of {qoi.n_qoi} QoIs in {model.n_params} parameters, "
          f"defect {reports.defect:.3e}")


def _cmd_grad_check(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    guess = resolve_guess(cfg, model)
    rows, gradient, reports = run.time_phase(
        "grad_check", grad_check, model, tableau, grid, mu, qoi,
        taus=cfg.grad_check.taus, primal_tol=cfg.shooting.tol,
        dual_tol=cfg.dual.tol, u0_guess=guess, workers=cfg.workers,
        eps_gmres=cfg.shooting.eps_gmres, stage_tol=cfg.shooting.stage_tol,
        max_newton=cfg.shooting.max_iter)
    io.write_grad_check_csv(run.path("grad_check.csv"), rows)
    io.write_gradient_csv(run.path("gradient.csv"), gradient)
    best = {}
    for r in rows:
        key = (r.qoi, r.param)
        best[key] = min(best.get(key, float("inf")), r.rel_error)
    run.results["min_rel_error"] = [
        {"qoi": q, "param": p, "value": v} for (q, p), v in sorted(best.items())]
    run.results["max_min_rel_error"] = max(best.values())
    run.figure("grad_check.png", plots.plot_grad_check, rows)
    print(f"  worst per-pair minimum relative error {max(best.values()):.3e}")


def _cmd_floquet(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    guess = resolve_guess(cfg, model)
    solution = run.time_phase("solve", _primal_solve, cfg, model, tableau,
                              grid, mu, guess)
    io.write_report_csv(run.path("shooting_report.csv"), solution.report)
    stability = run.time_phase(
        "floquet", analyze_stability, model, tableau, solution.trajectory, mu,
        k=cfg.floquet.k, tol=cfg.floquet.tol, margin=cfg.floquet.margin,
        stage_tol=cfg.shooting.stage_tol)
    io.write_eigenvalues_csv(run.path("eigenvalues.csv"),
                             stability.eigenvalues, stability.residuals)
    run.results["spectral_radius"] = stability.spectral_radius
    run.results["stable"] = stability.stable
    run.results["n_propagations"] = stability.n_propagations
    run.figure("multipliers.png", plots.plot_multipliers, stability.eigenvalues)
    print(f"  spectral radius {stability.spectral_radius:.6f}, "
          f"stable: {stability.stable}")


def _cmd_optimize(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    opt = cfg.optimize
    for label, idx in [("optimize.objective", opt.objective)] + [
            (f"optimize.constraints[{j}]", c) for j, c in enumerate(opt.constraints)]:
        if not 0 <= idx < qoi.n_qoi:
            raise ConfigError(f"{label}: QoI index {idx} out of range "
                              f"(model has {qoi.n_qoi} QoIs)")
    bounds = None
    if opt.lower is not None:
        lo = np.asarray(opt.lower, dtype=float)
        hi = np.asarray(opt.upper, dtype=float)
        if lo.shape != (model.n_params,):
            raise ConfigError(f"optimize.lower: expected {model.n_params} "
                              f"entries, got {lo.size}")
        bounds = (lo, hi)
    problem = OptProblem(
        model=model, qoi=qoi, tableau=tableau, grid=grid, mu0=mu,
        objective=opt.objective, constraints=list(opt.constraints),
        targets=list(opt.targets), bounds=bounds,
        u0_guess=resolve_guess(cfg, model),
        primal_tol=cfg.shooting.tol, dual_tol=cfg.dual.tol,
        tol_opt=opt.tol_opt, tol_con=opt.tol_con, max_outer=opt.max_outer,
        max_inner=opt.max_inner, memory=opt.memory, penalty0=opt.penalty0,
        eps_gmres=cfg.shooting.eps_gmres,
        m_precondition=cfg.shooting.m_precondition,
        max_newton=cfg.shooting.max_iter,
        stage_tol=cfg.shooting.stage_tol, workers=cfg.workers)
    mu_star, history = run.time_phase("optimize", optimize, problem)
    io.write_opt_history_csv(run.path("opt_history.csv"), history)
    run.results["mu_star"] = [float(m) for m in mu_star]
    run.results["objective"] = history.iterates[-1].objective
    run.results["converged"] = history.converged
    run.results["status"] = history.status
    run.results["n_evaluations"] = history.n_evaluations
    run.results["iterations"] = len(history.iterates) - 1
    run.figure("optimization.png", plots.plot_opt_history, history)
    print(f"  {history.status} after {history.n_evaluations} evaluations, "
          f"objective {history.iterates[-1].objective:.8e}")


def _sweep_cell(cfg, model, tableau, grid, mu, guess, method, tol, m):
    """One cell of the comparison matrix; divergence is a result, not an error."""
    sweep = cfg.sweep
    try:
        if method == "newton-krylov":
            solution = newton_krylov_solve(
                model, tableau, grid, mu, guess, tol=tol,
                eps_gmres=cfg.shooting.eps_gmres, m_precondition=m,
                max_newton=min(sweep.max_iter, 200),
                stage_tol=cfg.shooting.stage_tol)
        elif method == "fixed-point":
            solution = fixed_point_solve(
                model, tableau, grid, mu, guess, tol=tol,
                max_iter=sweep.max_iter, stage_tol=cfg.shooting.stage_tol)
        else:
            solution = optimization_shooting_solve(
                model, tableau, grid, mu, guess, tol=tol, method=method,
                max_iter=sweep.max_iter, m_precondition=m,
                stage_tol=cfg.shooting.stage_tol)
        report = solution.report
    except ShootingError as err:
        report = err.report
    return report


def _cmd_sweep(run):
    cfg = run.cfg
    model, qoi, tableau, grid, mu = _setup(cfg)
    guess = resolve_guess(cfg, model)
    cells = [(method, tol, m) for method in cfg.sweep.methods
             for tol in cfg.sweep.tols for m in cfg.sweep.m_values]

    def solve_cell(cell):
        return _sweep_cell(cfg, model, tableau, grid, mu, guess, *cell)

    t0 = time.perf_counter()
    if cfg.workers > 1:
        import concurrent.futures
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(solve_cell, cells))
    else:
        reports = [solve_cell(c) for c in cells]
    run.timings["sweep"] = time.perf_counter() - t0

    rows = []
    overlay = {}
    for (method, tol, m), report in zip(cells, reports):
        rows.append({
            "method": method, "tol": tol, "m_precondition": m,
            "converged": report.converged, "iterations": report.iterations,
            "n_evolve": report.n_evolve, "n_sensitivity": report.n_sensitivity,
            "final_defect": report.defect_history[-1],
        })
        label = f"{method}, tol={tol:g}" + (f", m={m}" if m else "")
        overlay[label] = report
    io.write_sweep_csv(run.path("sweep.csv"), rows)
    run.results["n_cells"] = len(cells)
    run.results["n_converged"] = sum(1 for r in rows if r["converged"])
    run.figure("sweep.png", plots.plot_sweep, overlay)
    print(f"  {run.results['n_converged']} of {len(cells)} cells converged")


_HANDLERS = {
    "solve-periodic": _cmd_solve_periodic,
    "adjoint": _cmd_adjoint,
    "gradient": _cmd_gradient,
    "grad-check": _cmd_grad_check,
    "floquet": _cmd_floquet,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        run = _Run(args.command, cfg, render_plots=not args.no_plots)
        _HANDLERS[args.command](run)
        run.finish()
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SolverError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
