"""Constrained design optimization over the periodic-solution manifold.

Minimizes one QoI subject to equality constraints on others,

    min_mu  F_obj(mu)   s.t.  F_q(mu) = target_q,  lo <= mu <= hi,

where every F is evaluated on a fully converged periodic solution at mu (a
generalized reduced-gradient strategy: the periodicity constraint is
eliminated by the inner shooting solve, and the exact reduced gradients come
from the periodic adjoints). The equality constraints are handled by an
augmented Lagrangian outer loop around L-BFGS inner solves; every parameter
trial reuses the previous iterate's periodic initial state as a warm start.

Line-search trials far from the current iterate may land where the shooting
solve fails; such trials are treated as +inf and the search backs off, so
``max_newton`` bounds the cost of a failed probe. ``m_precondition`` defaults
to 0 here: fixed-point sweeps contract toward the orbit only when it is
stable, and on design problems whose orbits turn unstable mid-path the sweeps
push a good warm start out of Newton's basin.
"""

from dataclasses import dataclass, field

import numpy as np

from ._descent import minimize_descent
from .dirk import DEFAULT_STAGE_TOL
from .errors import GradientError, OptimizationError
from .gradient import periodic_gradient


@dataclass
class OptProblem:
    """Specification of one constrained periodic design problem.

    ``objective`` and ``constraints`` index the QoI vector; ``targets`` are
    the required constraint values. ``bounds`` is None or (lo, hi) arrays.
    """

    model: object
    qoi: object
    tableau: object
    grid: object
    mu0: np.ndarray
    objective: int = 0
    constraints: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    bounds: object = None
    u0_guess: object = None
    primal_tol: float = 1e-10
    dual_tol: float = 1e-10
    tol_opt: float = 1e-6
    tol_con: float = 1e-5
    max_outer: int = 12
    max_inner: int = 40
    memory: int = 10
    penalty0: float = 1.0
    eps_gmres: float = 1e-3
    m_precondition: int = 0
    max_newton: int = 50
    stage_tol: float = DEFAULT_STAGE_TOL
    workers: int = 1


@dataclass
class OptIterate:
    """One accepted iterate of the optimization."""

    iteration: int
    outer: int
    mu: np.ndarray
    objective: float
    constraints: list
    optimality: float
    penalty: float
    multipliers: list
    defect: float


@dataclass
class OptHistory:
    """Accepted iterates plus outcome flags. Streams to CSV via module io."""

    iterates: list = field(default_factory=list)
    converged: bool = False
    status: str = ""
    n_evaluations: int = 0

    @property
    def objectives(self):
        return [it.objective for it in self.iterates]

    @property
    def optimalities(self):
        return [it.optimality for it in self.iterates]


def optimize(problem):
    """Run the augmented Lagrangian loop; returns (mu_star, OptHistory).

    Every recorded iterate's QoIs were evaluated at a periodic solution with
    defect <= primal_tol (evaluation failures make the line search back off,
    and persistent failure aborts with OptimizationError carrying the
    history). The penalty is multiplied by 10 whenever an outer iteration
    fails to cut the constraint residual by 4x while that residual still
    exceeds tol_con; multipliers are updated otherwise. Keeping the penalty
    frozen once the residual is inside tolerance matters: near convergence
    the residual flips sign at the solver floor, and a penalty allowed to
    grow there turns the multiplier update rho*c into noise of order one.
    Recorded optimality is the projected KKT residual at the first-order
    multiplier estimate lam + rho*c. With no constraints this reduces to a
    single L-BFGS run and the recorded penalties stay at zero.
    """
    con = list(problem.constraints)
    targets = np.asarray(problem.targets, dtype=float)
    if len(con) != targets.size:
        raise ValueError("constraints and targets must have equal length")
    n_con = len(con)
    mu0 = np.asarray(problem.mu0, dtype=float)
    bounds = problem.bounds
    if bounds is not None:
        bounds = (np.asarray(bounds[0], dtype=float), np.asarray(bounds[1], dtype=float))

    history = OptHistory()
    cache = {}
    warm = {"u0": np.zeros(problem.model.dim) if problem.u0_guess is None
            else np.asarray(problem.u0_guess, dtype=float)}

    def evaluate(mu):
        """(F, G, defect) at mu, on the periodic manifold; cached by value.

        Failures are cached as well: a parameter point whose periodic solve
        diverges will keep diverging, and line searches re-probe such points.
        """
        key = mu.tobytes()
        if key in cache:
            hit = cache[key]
            if isinstance(hit, GradientError):
                raise hit
            return hit
        try:
            qoi_value, gradient, reports = periodic_gradient(
                problem.model, problem.tableau, problem.grid, mu, problem.qoi,
                primal_tol=problem.primal_tol, dual_tol=problem.dual_tol,
                u0_guess=warm["u0"], eps_gmres=problem.eps_gmres,
                m_precondition=problem.m_precondition,
                max_newton=problem.max_newton, stage_tol=problem.stage_tol,
                workers=problem.workers)
        except GradientError as err:
            cache[key] = err
            raise
        warm["u0"] = reports.u0
        history.n_evaluations += 1
        out = (qoi_value.values.copy(), gradient.values.copy(), reports.defect)
        cache[key] = out
        return out

    lam = np.zeros(n_con)
    rho = float(problem.penalty0) if n_con else 0.0

    def kkt_optimality(mu, grads, c):
        """Projected gradient norm of the Lagrangian at lam + rho*c.

        lam + rho*c is the first-order multiplier estimate the inner solver
        actually works against (the augmented gradient is the Lagrangian
        gradient at that estimate), so this residual is the one the inner
        tolerance controls. Testing against the stale lam instead would keep
        reporting the multiplier error long after the iterate has converged.
        """
        lam_hat = lam + rho * c if n_con else lam
        g = grads[problem.objective] + (lam_hat @ grads[con] if n_con else 0.0)
        if bounds is None:
            return float(np.linalg.norm(g))
        return float(np.linalg.norm(mu - np.clip(mu - g, bounds[0], bounds[1])))

    counter = {"k": 0}

    def record(outer, mu, f_val, grads, defect):
        c = f_val[con] - targets if n_con else np.zeros(0)
        history.iterates.append(OptIterate(
            iteration=counter["k"], outer=outer, mu=mu.copy(),
            objective=float(f_val[problem.objective]), constraints=c.tolist(),
            optimality=kkt_optimality(mu, grads, c), penalty=rho,
            multipliers=lam.tolist(), defect=defect))
        counter["k"] += 1

    mu = mu0.copy()
    prev_cnorm = np.inf
    status = "max-outer"
    converged = False
    for outer in range(problem.max_outer):
        def aug_fg(mu_trial):
            try:
                f_val, grads, defect = evaluate(mu_trial)
            except GradientError:
                return None
            c = f_val[con] - targets if n_con else np.zeros(0)
            f = f_val[problem.objective] + lam @ c + 0.5 * rho * (c @ c)
            g = grads[problem.objective] + ((lam + rho * c) @ grads[con] if n_con else 0.0)
            return f, g

        def on_iterate(k, x, f, g, _outer=outer):
            if _outer > 0 and k == 0:
                return  # the start point was already recorded last outer pass
            f_val, grads, defect = evaluate(x)  # cached
            record(_outer, x, f_val, grads, defect)

        # Unconstrained problems get the final tolerance immediately; with
        # constraints the inner tolerance tightens as the multipliers settle.
        inner_tol = problem.tol_opt if not n_con else max(problem.tol_opt, 1e-2 * 0.2**outer)
        try:
            result = minimize_descent(
                aug_fg, mu, method="l-bfgs", memory=problem.memory,
                max_iter=problem.max_inner, grad_tol=inner_tol, bounds=bounds,
                on_iterate=on_iterate)
        except ValueError as err:
            raise OptimizationError(f"inner solve failed: {err}", history)
        mu = result.x
        f_val, grads, defect = evaluate(mu)
        c = f_val[con] - targets if n_con else np.zeros(0)
        cnorm = float(np.max(np.abs(c))) if n_con else 0.0
        opt = kkt_optimality(mu, grads, c)
        if opt <= problem.tol_opt and cnorm <= problem.tol_con:
            converged = True
            status = "converged"
            break
        if not n_con:
            status = result.status if result.status != "converged" else "stalled"
            break
        if cnorm > max(prev_cnorm / 4.0, problem.tol_con):
            rho *= 10.0
        else:
            lam = lam + rho * c
        prev_cnorm = cnorm
    history.converged = converged
    history.status = status
    return mu, history
