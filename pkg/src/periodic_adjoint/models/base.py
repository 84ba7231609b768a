"""Interfaces for parametrized semi-discrete systems and quantities of interest.

A model is the spatially discretized side of an evolution equation

    M du/dt = r(u, mu, t),

with r periodic in t with period ``period`` for every parameter vector mu.
States and parameters are plain float64 numpy arrays. The mass matrix is
exposed only through apply/solve actions so that large models can remain
matrix-free; small built-ins may additionally expose dense forms for oracles
by setting ``has_dense_jacobian`` and implementing ``jac_u_matrix`` and
``mass_matrix``.
"""

import numpy as np


class SemiDiscreteModel:
    """Callback bundle describing M du/dt = r(u, mu, t).

    Attributes
    ----------
    dim : int
        State dimension N_u.
    n_params : int
        Parameter dimension.
    period : float
        Period T of the explicit time dependence of ``residual``.
    default_mu : ndarray, shape (n_params,)
        A nominal parameter vector, used by configs when none is given.
    has_dense_jacobian : bool
        True when ``jac_u_matrix`` and ``mass_matrix`` are implemented;
        solvers then factor stage systems directly instead of running
        matrix-free Krylov iterations.
    jac_is_constant : bool
        True when dr/du does not depend on (u, t), enabling reuse of stage
        factorizations across steps.
    """

    dim = 0
    n_params = 0
    period = 0.0
    has_dense_jacobian = False
    jac_is_constant = False

    def residual(self, u, mu, t):
        """Velocity r(u, mu, t), shape (dim,)."""
        raise NotImplementedError

    def jac_u_apply(self, u, mu, t, v):
        """Directional derivative (dr/du) v, shape (dim,)."""
        raise NotImplementedError

    def jac_u_apply_transpose(self, u, mu, t, v):
        """Transpose action (dr/du)^T v, shape (dim,)."""
        raise NotImplementedError

    def jac_mu_apply_transpose(self, u, mu, t, w):
        """Transpose action (dr/dmu)^T w, shape (n_params,)."""
        raise NotImplementedError

    # Identity mass matrix by default; override all four together.
    def mass_apply(self, v):
        """M v."""
        return np.array(v, dtype=float)

    def mass_solve(self, v):
        """M^{-1} v."""
        return np.array(v, dtype=float)

    def mass_apply_transpose(self, v):
        """M^T v."""
        return np.array(v, dtype=float)

    def mass_solve_transpose(self, v):
        """M^{-T} v."""
        return np.array(v, dtype=float)

    def jac_u_matrix(self, u, mu, t):
        """Dense dr/du, only when ``has_dense_jacobian`` is True."""
        raise NotImplementedError

    def mass_matrix(self):
        """Dense M, only when ``has_dense_jacobian`` is True."""
        raise NotImplementedError


class QuantityOfInterest:
    """Time-periodic output functionals F_q = integral over one period of
    f_q(u(t), mu, t) dt, q = 0..n_qoi-1.

    Only the integrand and its derivatives are specified here; the
    solver-consistent quadrature lives with the time discretization.
    """

    n_qoi = 0

    def integrand(self, u, mu, t):
        """f(u, mu, t), shape (n_qoi,)."""
        raise NotImplementedError

    def integrand_grad_u(self, u, mu, t, w):
        """Transpose action (df/du)^T w for w of shape (n_qoi,); returns (dim,)."""
        raise NotImplementedError

    def integrand_grad_mu(self, u, mu, t):
        """Dense df/dmu, shape (n_qoi, n_params)."""
        raise NotImplementedError


class CallbackQoi(QuantityOfInterest):
    """Quantity of interest assembled from plain callables.

    Parameters
    ----------
    n_qoi : int
    integrand : callable
        (u, mu, t) -> (n_qoi,) array.
    grad_u : callable
        (u, mu, t) -> (n_qoi, dim) array of integrand state derivatives.
    grad_mu : callable, optional
        (u, mu, t) -> (n_qoi, n_params) array; defaults to zero.
    n_params : int
        Needed only when grad_mu is omitted, to size the zero block.
    """

    def __init__(self, n_qoi, integrand, grad_u, grad_mu=None, n_params=0):
        self.n_qoi = int(n_qoi)
        self._integrand = integrand
        self._grad_u = grad_u
        self._grad_mu = grad_mu
        self._n_params = int(n_params)

    def integrand(self, u, mu, t):
        return np.asarray(self._integrand(u, mu, t), dtype=float)

    def integrand_grad_u(self, u, mu, t, w):
        g = np.asarray(self._grad_u(u, mu, t), dtype=float)
        return g.T @ np.asarray(w, dtype=float)

    def integrand_grad_mu(self, u, mu, t):
        if self._grad_mu is None:
            return np.zeros((self.n_qoi, self._n_params))
        return np.asarray(self._grad_mu(u, mu, t), dtype=float)
