"""Linearized propagation along a frozen DIRK trajectory.

Differentiating the stage equations of one step gives the tangent update

    (M - dt a_ii J_i) z_i = dt J_i (w + sum_{j<i} a_ij z_j),      w <- w + sum_i b_i z_i,

with J_i = dr/du at stage state u_i; composing over all steps applies the
one-period sensitivity operator d(u^(Nt))/d(u^(0)) to a seed vector without
ever forming it. Transposing the same relations step by step yields the
backward (adjoint) recurrence

    (M^T - dt a_ii J_i^T) kappa_i = dF/dk_i + b_i lam + dt sum_{j>i} a_ji J_j^T kappa_j,
    lam <- lam + dF/du^(n-1) + dt sum_i J_i^T kappa_i,

run from lam = lambda^(Nt) down to lambda^(0), with the QoI partials entering
as sources. With zero sources the backward sweep applies the transpose of
the one-period sensitivity operator; this adjoint/tangent transpose pairing
is exact at the discrete level and is what makes the periodic gradients
exact.
"""

from dataclasses import dataclass

import numpy as np

from ._stagelin import StageSystem
from .dirk import DEFAULT_STAGE_TOL, TimeGrid, stage_states, stage_times


@dataclass
class DualTrajectory:
    """Adjoint states and stage duals of one backward sweep.

    ``lambdas[n]`` is the adjoint state at knot n; ``stage_duals[n, i]`` is
    kappa_i of the step from knot n to n+1.
    """

    grid: TimeGrid
    lambdas: np.ndarray
    stage_duals: np.ndarray

    @property
    def initial(self):
        return self.lambdas[0]


class StageOperators:
    """Frozen-trajectory stage linearizations with factorization reuse.

    Builds every stage state and time once, then serves Jacobian actions and
    shifted stage solves for arbitrary (step, stage) pairs. Share one
    instance across the many sweeps of a Krylov solve to amortize dense
    factorizations.
    """

    def __init__(self, model, tableau, trajectory, mu, tol=DEFAULT_STAGE_TOL):
        self.model = model
        self.tableau = tableau
        self.trajectory = trajectory
        self.mu = np.asarray(mu, dtype=float)
        self.tol = float(tol)
        self._system = StageSystem(model, self.mu, atol=tol / 10.0)
        grid = trajectory.grid
        n_steps, s = grid.n_steps, tableau.n_stages
        self.u_stage = np.empty((n_steps, s, model.dim))
        self.t_stage = np.empty((n_steps, s))
        for n in range(n_steps):
            self.u_stage[n] = stage_states(tableau, trajectory.states[n], trajectory.stages[n])
            self.t_stage[n] = stage_times(tableau, grid.knots[n], grid.dt[n])
        self.shifts = np.outer(grid.dt, np.diag(tableau.a))

    def _key(self, n, i):
        return self.shifts[n, i] if self.model.jac_is_constant else (n, i)

    def jac_apply(self, n, i, v, transpose=False):
        """J(u_i^(n)) v or its transpose action."""
        fn = self.model.jac_u_apply_transpose if transpose else self.model.jac_u_apply
        return fn(self.u_stage[n, i], self.mu, self.t_stage[n, i], v)

    def solve(self, n, i, rhs, transpose=False):
        """Solve (M - dt_n a_ii J(u_i^(n))) x = rhs or the transpose system."""
        return self._system.solve(
            self.u_stage[n, i],
            self.t_stage[n, i],
            self.shifts[n, i],
            rhs,
            transpose=transpose,
            key=self._key(n, i),
            step=n + 1,
            stage=i,
        )


def _operators(model, tableau, trajectory, mu, tol, operators):
    if operators is not None:
        return operators
    return StageOperators(model, tableau, trajectory, mu, tol=tol)


def forward_sensitivity_apply(model, tableau, trajectory, mu, v, tol=DEFAULT_STAGE_TOL,
                              operators=None):
    """Apply the one-period tangent operator d(u^(Nt))/d(u^(0)) to v.

    Costs one linearized stage solve per (step, stage). Pass a prebuilt
    ``operators`` to reuse factorizations across many applications.
    """
    ops = _operators(model, tableau, trajectory, mu, tol, operators)
    a, b = tableau.a, tableau.b
    s = tableau.n_stages
    grid = trajectory.grid
    w = np.array(v, dtype=float)
    z = np.empty((s, model.dim))
    for n in range(grid.n_steps):
        dt = grid.dt[n]
        for i in range(s):
            direction = w + a[i, :i] @ z[:i] if i else w
            z[i] = ops.solve(n, i, dt * ops.jac_apply(n, i, direction))
        w = w + b @ z
    return w


def _adjoint_sweep(model, tableau, trajectory, mu, lam_final, d_state, d_stage,
                   tol, operators, store):
    """Backward recurrence shared by the adjoint entry points.

    d_state/d_stage are per-QoI source arrays (or None); ``store`` keeps the
    full dual trajectory instead of just lambda^(0).
    """
    ops = _operators(model, tableau, trajectory, mu, tol, operators)
    a, b = tableau.a, tableau.b
    s = tableau.n_stages
    grid = trajectory.grid
    n_steps = grid.n_steps
    lam = np.array(lam_final, dtype=float)
    if lam.shape != (model.dim,):
        raise ValueError("terminal adjoint state does not match model dimension")
    if store:
        lambdas = np.empty((n_steps + 1, model.dim))
        lambdas[n_steps] = lam
        stage_duals = np.empty((n_steps, s, model.dim))
    y = np.empty((s, model.dim))
    kappa = np.empty((s, model.dim))
    for n in reversed(range(n_steps)):
        dt = grid.dt[n]
        for i in reversed(range(s)):
            rhs = b[i] * lam
            if d_stage is not None:
                rhs = rhs + d_stage[n, i]
            if i < s - 1:
                rhs = rhs + dt * (a[i + 1:, i] @ y[i + 1:])
            kappa[i] = ops.solve(n, i, rhs, transpose=True)
            y[i] = ops.jac_apply(n, i, kappa[i], transpose=True)
        lam = lam + dt * y.sum(axis=0)
        if d_state is not None:
            lam = lam + d_state[n]
        if store:
            lambdas[n] = lam
            stage_duals[n] = kappa.copy()
    if store:
        return DualTrajectory(grid=grid, lambdas=lambdas, stage_duals=stage_duals)
    return lam


def qoi_sources(qoi_value, qoi_index):
    """Views of one QoI's state and stage partials, as adjoint sources."""
    return (
        qoi_value.d_state[:, qoi_index, :],
        qoi_value.d_stage[:, :, qoi_index, :],
    )


def adjoint_backward_evolve(model, tableau, trajectory, mu, lambda_final,
                            qoi_partials=None, qoi_index=0, tol=DEFAULT_STAGE_TOL,
                            operators=None):
    """One backward adjoint evolution; returns the full DualTrajectory.

    With ``qoi_partials`` (a QoiValue) the sweep injects that QoI's partial
    derivatives as sources, which is the inhomogeneous half of the periodic
    dual problem; without them it is the homogeneous transpose propagation.
    """
    d_state = d_stage = None
    if qoi_partials is not None:
        d_state, d_stage = qoi_sources(qoi_partials, qoi_index)
    return _adjoint_sweep(model, tableau, trajectory, mu, lambda_final,
                          d_state, d_stage, tol, operators, store=True)


def adjoint_sensitivity_apply(model, tableau, trajectory, mu, v, tol=DEFAULT_STAGE_TOL,
                              operators=None):
    """Apply the transposed one-period operator (d(u^(Nt))/d(u^(0)))^T to v.

    Implemented as a source-free backward sweep from lambda^(Nt) = v,
    returning lambda^(0) only.
    """
    return _adjoint_sweep(model, tableau, trajectory, mu, v, None, None, tol,
                          operators, store=False)
