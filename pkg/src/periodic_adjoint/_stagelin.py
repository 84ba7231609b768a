"""Shifted stage operators S = M - shift * (dr/du), shared across solvers.

Every implicit DIRK stage, every linearized (tangent) stage and every adjoint
stage reduces to a solve with S or S^T at some frozen stage state. Models
that expose dense Jacobians are factored once per cache key; everything else
goes through matrix-free GMRES at a caller-chosen absolute tolerance.
"""

import numpy as np
import scipy.linalg

from .errors import StageSolveError
from .krylov import LinearOperator, gmres


class StageSystem:
    """Factory for solves with (M - shift J(u)) and its transpose.

    Parameters
    ----------
    model : SemiDiscreteModel
    mu : ndarray
        Parameter vector, fixed for the lifetime of the system.
    atol : float
        Absolute residual tolerance for the matrix-free path.
    """

    def __init__(self, model, mu, atol):
        self.model = model
        self.mu = np.asarray(mu, dtype=float)
        self.atol = float(atol)
        self._lu = {}
        self._mass = model.mass_matrix() if model.has_dense_jacobian else None

    def solve(self, u_stage, t_stage, shift, rhs, transpose=False, key=None, step=0, stage=0):
        """Solve (M - shift J(u_stage, t_stage)) x = rhs (or the transpose).

        ``key`` enables factorization reuse on the dense path; pass a value
        that uniquely identifies (u_stage, t_stage, shift), or just ``shift``
        for models with constant Jacobians.
        """
        if self.model.has_dense_jacobian:
            lu = self._lu.get(key) if key is not None else None
            if lu is None:
                jac = self.model.jac_u_matrix(u_stage, self.mu, t_stage)
                lu = scipy.linalg.lu_factor(self._mass - shift * jac)
                if key is not None:
                    self._lu[key] = lu
            return scipy.linalg.lu_solve(lu, rhs, trans=1 if transpose else 0)

        model, mu = self.model, self.mu
        if transpose:
            def apply(v):
                return model.mass_apply_transpose(v) - shift * model.jac_u_apply_transpose(
                    u_stage, mu, t_stage, v
                )
        else:
            def apply(v):
                return model.mass_apply(v) - shift * model.jac_u_apply(
                    u_stage, mu, t_stage, v
                )
        op = LinearOperator(model.dim, apply)
        x, report = gmres(op, rhs, tol=0.0, atol=self.atol, max_iter=2 * model.dim)
        if not report.converged:
            raise StageSolveError(
                "linearized stage solve stalled (operator close to singular?)",
                step=step,
                stage=stage,
                residual=report.final_residual,
            )
        return x
