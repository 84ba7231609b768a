"""Linear time-periodic model M du/dt = A u + g(t; mu).

The forcing g is a truncated Fourier series in t whose stacked coefficient
vectors are the model parameters, so the one-period map is affine in both the
initial condition and mu. This is the analytically tractable instance used to
validate everything else: a dense oracle can assemble the monodromy matrix
and the exact discrete periodic orbit directly.
"""

import numpy as np
import scipy.linalg

from .base import CallbackQoi, SemiDiscreteModel


class FourierForcing:
    """Vector-valued truncated Fourier series on [0, T].

        g(t; mu) = sum_k cos(2 pi k t / T) * p_k  +  sum_{k>=1} sin(2 pi k t / T) * q_k

    with k running over ``harmonics`` (non-negative, sorted, unique). The
    parameter vector stacks the p_k blocks for all harmonics followed by the
    q_k blocks for the positive harmonics, each block of length ``dim``.

    Parameters
    ----------
    cos_coeffs : ndarray, shape (n_harmonics, dim)
        Nominal cosine coefficient vectors p_k.
    sin_coeffs : ndarray, shape (n_positive, dim)
        Nominal sine coefficient vectors q_k for the positive harmonics.
    harmonics : sequence of int, optional
        Harmonic indices; defaults to 0..n_harmonics-1.
    """

    def __init__(self, cos_coeffs, sin_coeffs, harmonics=None):
        self.cos_coeffs = np.atleast_2d(np.asarray(cos_coeffs, dtype=float))
        self.sin_coeffs = np.atleast_2d(np.asarray(sin_coeffs, dtype=float))
        if self.sin_coeffs.size == 0:
            self.sin_coeffs = self.sin_coeffs.reshape(0, self.cos_coeffs.shape[1])
        if harmonics is None:
            harmonics = range(self.cos_coeffs.shape[0])
        self.harmonics = tuple(int(k) for k in harmonics)
        if sorted(set(self.harmonics)) != list(self.harmonics):
            raise ValueError("harmonics must be sorted and unique")
        if any(k < 0 for k in self.harmonics):
            raise ValueError("harmonics must be non-negative")
        self.dim = self.cos_coeffs.shape[1]
        n_pos = sum(1 for k in self.harmonics if k > 0)
        if self.cos_coeffs.shape[0] != len(self.harmonics):
            raise ValueError("one cosine coefficient block per harmonic required")
        if self.sin_coeffs.shape != (n_pos, self.dim):
            raise ValueError("one sine coefficient block per positive harmonic required")
        self.n_params = (len(self.harmonics) + n_pos) * self.dim

    @property
    def default_mu(self):
        return np.concatenate([self.cos_coeffs.ravel(), self.sin_coeffs.ravel()])

    def _basis(self, t, period):
        w = 2.0 * np.pi / period
        cos_vals = [np.cos(w * k * t) for k in self.harmonics]
        sin_vals = [np.sin(w * k * t) for k in self.harmonics if k > 0]
        return np.array(cos_vals + sin_vals)

    def value(self, mu, t, period):
        """g(t; mu), shape (dim,)."""
        blocks = np.asarray(mu, dtype=float).reshape(-1, self.dim)
        return self._basis(t, period) @ blocks

    def coeff_apply_transpose(self, w, t, period):
        """(dg/dmu)^T w, shape (n_params,)."""
        return np.outer(self._basis(t, period), np.asarray(w, dtype=float)).ravel()


class LinearPeriodicModel(SemiDiscreteModel):
    """M du/dt = A u + g(t; mu) with dense A and SPD dense (or identity) M."""

    has_dense_jacobian = True
    jac_is_constant = True

    def __init__(self, a_matrix, forcing, mass=None, period=1.0):
        a_matrix = np.array(a_matrix, dtype=float)
        if a_matrix.ndim != 2 or a_matrix.shape[0] != a_matrix.shape[1]:
            raise ValueError("A must be square")
        if forcing.dim != a_matrix.shape[0]:
            raise ValueError("forcing dimension does not match A")
        if not period > 0.0:
            raise ValueError("period must be positive")
        self.dim = a_matrix.shape[0]
        self.n_params = forcing.n_params
        self.period = float(period)
        self.forcing = forcing
        self._a = a_matrix
        self._a.setflags(write=False)
        if mass is None:
            mass = np.eye(self.dim)
        mass = np.array(mass, dtype=float)
        if mass.shape != a_matrix.shape:
            raise ValueError("M must match the shape of A")
        cond = np.linalg.cond(mass)
        if not np.isfinite(cond) or cond > 1e13:
            raise ValueError("mass matrix is numerically singular")
        self._mass = mass
        self._mass.setflags(write=False)
        self._mass_lu = scipy.linalg.lu_factor(mass)

    @property
    def default_mu(self):
        return self.forcing.default_mu

    def residual(self, u, mu, t):
        return self._a @ u + self.forcing.value(mu, t, self.period)

    def jac_u_apply(self, u, mu, t, v):
        return self._a @ v

    def jac_u_apply_transpose(self, u, mu, t, v):
        return self._a.T @ v

    def jac_mu_apply_transpose(self, u, mu, t, w):
        return self.forcing.coeff_apply_transpose(w, t, self.period)

    def mass_apply(self, v):
        return self._mass @ v

    def mass_solve(self, v):
        return scipy.linalg.lu_solve(self._mass_lu, v)

    def mass_apply_transpose(self, v):
        return self._mass.T @ v

    def mass_solve_transpose(self, v):
        return scipy.linalg.lu_solve(self._mass_lu, v, trans=1)

    def jac_u_matrix(self, u, mu, t):
        return self._a

    def mass_matrix(self):
        return self._mass


def make_linear_periodic(a_matrix, forcing, mass=None, period=1.0):
    """Assemble the linear time-periodic built-in model.

    Parameters
    ----------
    a_matrix : ndarray, shape (n, n)
        System matrix A.
    forcing : FourierForcing
        Fourier forcing; its stacked coefficients are the parameters.
    mass : ndarray or None
        SPD mass matrix; identity when None. A numerically singular matrix
        raises ValueError at construction.
    period : float
        Period T of the forcing.
    """
    return LinearPeriodicModel(a_matrix, forcing, mass=mass, period=period)


def make_random_linear_periodic(
    dim,
    period,
    seed,
    target_radius=0.5,
    n_harmonics=2,
    mass="identity",
    forcing_scale=1.0,
    complex_pair=True,
):
    """Random stable instance with a prescribed one-period contraction.

    The continuous-time eigenvalues of M^{-1} A are placed so that the exact
    monodromy e^{M^{-1}A T} has spectral radius ``target_radius``; the
    time-discrete radius then matches to discretization accuracy. One complex
    pair is included by default so the spectrum is not purely real.

    Parameters
    ----------
    dim : int
    period : float
    seed : int
        Seed for numpy's default_rng; instances are deterministic in it.
    target_radius : float
        Desired spectral radius of the one-period map, in (0, 1).
    n_harmonics : int
        Forcing harmonics 0..n_harmonics-1.
    mass : {'identity', 'spd'}
        Identity mass or a random well-conditioned SPD mass.
    forcing_scale : float
        Magnitude of the random Fourier coefficients.
    complex_pair : bool
        Replace the two slowest real modes by a complex pair when dim >= 2.
    """
    if not 0.0 < target_radius < 1.0:
        raise ValueError("target_radius must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    # Per-mode one-period contractions, log-spaced below the target radius.
    rho = np.exp(np.linspace(np.log(target_radius), np.log(0.05 * target_radius), dim))
    lam = np.log(rho) / period
    blocks = scipy.linalg.block_diag(*[np.array([[v]]) for v in lam])
    if complex_pair and dim >= 2:
        omega = 0.7 * 2.0 * np.pi / period
        blocks[0:2, 0:2] = np.array([[lam[0], omega], [-omega, lam[0]]])
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    b_matrix = q @ blocks @ q.T
    if mass == "identity":
        mass_matrix = None
        a_matrix = b_matrix
    elif mass == "spd":
        s = rng.standard_normal((dim, dim)) / np.sqrt(dim)
        mass_matrix = np.eye(dim) + 0.5 * (s @ s.T)
        a_matrix = mass_matrix @ b_matrix
    else:
        raise ValueError("mass must be 'identity' or 'spd'")
    cos_coeffs = forcing_scale * rng.standard_normal((n_harmonics, dim))
    sin_coeffs = forcing_scale * rng.standard_normal((max(n_harmonics - 1, 0), dim))
    forcing = FourierForcing(cos_coeffs, sin_coeffs)
    return LinearPeriodicModel(a_matrix, forcing, mass=mass_matrix, period=period)


def make_linear_qoi(model):
    """Component-mean QoIs for the linear model: mean(u), mean(u^2), mean(u^3).

    The cubic component gives finite differencing a genuine O(tau^2)
    truncation error on this otherwise affine-in-mu model, which is what the
    gradient verification curves are meant to exhibit.
    """
    n = model.dim

    def integrand(u, mu, t):
        return np.array([u.mean(), np.mean(u**2), np.mean(u**3)])

    def grad_u(u, mu, t):
        return np.vstack([np.full(n, 1.0 / n), 2.0 * u / n, 3.0 * u**2 / n])

    return CallbackQoi(3, integrand, grad_u, n_params=model.n_params)
