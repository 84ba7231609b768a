"""DIRK time stepping over one period and solver-consistent QoI quadrature.

One step of an s-stage DIRK scheme from u_prev over dt solves, stage by
stage,

    M k_i = dt * r(u_i, mu, t_prev + c_i dt),
    u_i   = u_prev + sum_{j<=i} a_ij k_j,

and advances u_next = u_prev + sum_i b_i k_i. Because the tableau is lower
triangular each stage is a single implicit solve in k_i, performed here by
Newton's method with the shifted operator M - dt a_ii J.

Quantities of interest are accumulated with the scheme's own quadrature,

    F = sum_n dt_n sum_i b_i f(u_i^(n), mu, t_{n-1} + c_i dt_n),

so that F is an exact function of the discrete trajectory; its partial
derivatives with respect to every state and stage are recorded alongside for
use by the adjoint.
"""

from dataclasses import dataclass

import numpy as np

from ._stagelin import StageSystem
from .errors import StageSolveError

DEFAULT_STAGE_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time knots t_0 = 0 < t_1 < ... < t_{N_t} = T."""

    knots: np.ndarray

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        if knots.ndim != 1 or knots.size < 2:
            raise ValueError("a time grid needs at least two knots")
        if knots[0] != 0.0:
            raise ValueError("time grids start at t = 0")
        if np.any(np.diff(knots) <= 0.0):
            raise ValueError("time knots must be strictly increasing")

    @classmethod
    def uniform(cls, period, n_steps):
        if n_steps < 1:
            raise ValueError("n_steps must be positive")
        if not period > 0.0:
            raise ValueError("period must be positive")
        return cls(np.linspace(0.0, period, n_steps + 1))

    @property
    def n_steps(self):
        return self.knots.size - 1

    @property
    def dt(self):
        return np.diff(self.knots)

    @property
    def period(self):
        return float(self.knots[-1])


@dataclass
class Trajectory:
    """States and stage slopes of one evolution over the grid.

    ``states[n]`` is u^(n) at knot n (0..N_t); ``stages[n, i]`` is k_i of the
    step from knot n to knot n+1.
    """

    grid: TimeGrid
    states: np.ndarray
    stages: np.ndarray

    @property
    def final(self):
        return self.states[-1]


@dataclass
class QoiValue:
    """Solver-consistent QoI values and their trajectory partials.

    ``values[q]`` is F_q. ``d_state[n, q]`` is dF_q/du^(n) (zero at n = N_t
    since the quadrature only references stage states built from
    u^(0..N_t-1)). ``d_stage[n, i, q]`` is dF_q/dk_i of step n, and
    ``d_mu[q]`` the explicit parameter partial.
    """

    values: np.ndarray
    d_state: np.ndarray
    d_stage: np.ndarray
    d_mu: np.ndarray

    @property
    def n_qoi(self):
        return self.values.size


def stage_states(tableau, u_prev, stages_n):
    """All stage states u_i = u_prev + sum_{j<=i} a_ij k_j, shape (s, dim)."""
    return u_prev[None, :] + tableau.a @ stages_n


def stage_times(tableau, t_prev, dt):
    """All stage times t_prev + c_i dt, shape (s,)."""
    return t_prev + tableau.c * dt


def step(model, tableau, mu, u_prev, t_prev, dt, tol=DEFAULT_STAGE_TOL,
         max_newton=30, _system=None, stages_guess=None):
    """Advance one DIRK step; returns (u_next, stages) with stages (s, dim).

    Each stage equation is solved by Newton iteration until the residual
    ||M k - dt r|| falls at or below ``tol`` (absolute). Failure to converge
    within ``max_newton`` iterations raises StageSolveError carrying the
    stage index and last residual. ``stages_guess`` seeds the Newton
    iterations, typically with the previous step's slopes, which agree with
    the new ones to O(dt^2) on a smooth trajectory; the default is zero.
    """
    system = _system if _system is not None else StageSystem(model, mu, atol=tol / 10.0)
    a, b, c = tableau.a, tableau.b, tableau.c
    s = tableau.n_stages
    stages = np.zeros((s, model.dim))
    for i in range(s):
        base = u_prev + a[i, :i] @ stages[:i] if i else u_prev.copy()
        t_i = t_prev + c[i] * dt
        shift = dt * a[i, i]
        if a[i, i] == 0.0:
            stages[i] = model.mass_solve(dt * model.residual(base, mu, t_i))
            continue
        key = shift if model.jac_is_constant else None
        k = np.zeros(model.dim) if stages_guess is None else stages_guess[i].copy()
        u_i = base + a[i, i] * k
        for it in range(max_newton + 1):
            res = model.mass_apply(k) - dt * model.residual(u_i, mu, t_i)
            res_norm = np.linalg.norm(res)
            if res_norm <= tol:
                break
            if it == max_newton:
                raise StageSolveError(
                    f"stage {i} Newton stalled at residual {res_norm:.3e}",
                    stage=i,
                    residual=res_norm,
                )
            k = k + system.solve(u_i, t_i, shift, -res, key=key, stage=i)
            u_i = base + a[i, i] * k
        stages[i] = k
    u_next = u_prev + b @ stages
    return u_next, stages


def evolve(model, tableau, grid, mu, u0, stage_tol=DEFAULT_STAGE_TOL):
    """Integrate over the whole grid from u0; returns a Trajectory.

    Stage failures are re-raised with the (1-based) step index attached.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (model.dim,):
        raise ValueError("initial state does not match model dimension")
    n_steps = grid.n_steps
    states = np.empty((n_steps + 1, model.dim))
    stages = np.empty((n_steps, tableau.n_stages, model.dim))
    states[0] = u0
    system = StageSystem(model, mu, atol=stage_tol / 10.0)
    knots = grid.knots
    for n in range(n_steps):
        try:
            states[n + 1], stages[n] = step(
                model, tableau, mu, states[n], knots[n], knots[n + 1] - knots[n],
                tol=stage_tol, _system=system,
                stages_guess=stages[n - 1] if n else None,
            )
        except StageSolveError as err:
            err.step = n + 1
            raise
    return Trajectory(grid=grid, states=states, stages=stages)


def accumulate_qoi(model, qoi, tableau, trajectory, mu):
    """Evaluate all QoIs on a trajectory with the scheme-consistent quadrature.

    Returns a QoiValue holding the values and the partial derivatives of
    every QoI with respect to every state u^(n) and stage k_i^(n), which are
    exactly the source terms the periodic adjoint needs.
    """
    grid = trajectory.grid
    n_steps, s = grid.n_steps, tableau.n_stages
    n_qoi = qoi.n_qoi
    values = np.zeros(n_qoi)
    d_state = np.zeros((n_steps + 1, n_qoi, model.dim))
    d_stage = np.zeros((n_steps, s, n_qoi, model.dim))
    d_mu = np.zeros((n_qoi, model.n_params))
    eye_q = np.eye(n_qoi)
    a, b = tableau.a, tableau.b
    dts = grid.dt
    for n in range(n_steps):
        dt = dts[n]
        u_stage = stage_states(tableau, trajectory.states[n], trajectory.stages[n])
        t_stage = stage_times(tableau, grid.knots[n], dt)
        for i in range(s):
            w = dt * b[i]
            values += w * qoi.integrand(u_stage[i], mu, t_stage[i])
            d_mu += w * qoi.integrand_grad_mu(u_stage[i], mu, t_stage[i])
            for q in range(n_qoi):
                g = qoi.integrand_grad_u(u_stage[i], mu, t_stage[i], eye_q[q])
                d_state[n, q] += w * g
                for j in range(i + 1):
                    d_stage[n, j, q] += w * a[i, j] * g
    return QoiValue(values=values, d_state=d_state, d_stage=d_stage, d_mu=d_mu)
