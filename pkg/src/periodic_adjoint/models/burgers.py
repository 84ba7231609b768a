"""Viscous Burgers equation on a periodic interval with a moving source.

    du/dt = -d/dx(u^2/2) + nu d2u/dx2 - sigma u + mu1 * phi(x - x_c(t); mu3)

on x in [0, 1) with n_cells finite-difference points. The source profile phi
is a wrapped Gaussian bump of width mu3, and its center oscillates,

    x_c(t) = 1/2 + mu2 sin(2 pi t / T),

so the residual is exactly T-periodic for every mu (a uniformly translating
center would be periodic only for whole numbers of laps). mu2 is the motion
amplitude; the peak center speed is 2 pi mu2 / T.

The linear drag sigma > 0 is what makes the periodic problem well posed.
The centered flux and diffusion stencils both telescope to zero, so without
drag the discrete mean of u grows linearly under the strictly positive
source and no periodic orbit exists; a mean-free source would instead
conserve the mean exactly, leaving a unit Floquet multiplier that makes the
shooting and dual operators singular. Drag damps that mode to exp(-sigma T)
per period.

The convective term is kept in discrete divergence form so constant states
are exact steady solutions of the unforced, undamped equation. With
mass='fem' the model carries the periodic linear-element mass matrix scaled
by 1/h, the symmetric circulant with stencil (1/6)(1, 4, 1), applied and
inverted via real FFTs. The 1/h scaling keeps it consistent with the
pointwise finite-difference residual: rows sum to one, so M du/dt = r
recovers du/dt = r as the stencil lumps. This model deliberately does not
expose dense Jacobians: it is the large-N surrogate that exercises the
matrix-free solver paths.
"""

import numpy as np

from .base import QuantityOfInterest, SemiDiscreteModel


class PeriodicBurgers(SemiDiscreteModel):
    def __init__(self, n_cells, viscosity, period, mass="fem", drag=0.4):
        if n_cells < 16:
            raise ValueError("n_cells must be at least 16")
        if not viscosity > 0.0:
            raise ValueError("viscosity must be positive")
        if not period > 0.0:
            raise ValueError("period must be positive")
        if not drag > 0.0:
            raise ValueError("drag must be positive, see module docstring")
        if mass not in ("fem", "identity"):
            raise ValueError("mass must be 'fem' or 'identity'")
        self.dim = int(n_cells)
        self.n_params = 3
        self.period = float(period)
        self.viscosity = float(viscosity)
        self.drag = float(drag)
        self.length = 1.0
        self.h = self.length / self.dim
        self.x = self.h * np.arange(self.dim)
        self.default_mu = np.array([1.0, 0.12, 0.08])
        self._identity_mass = mass == "identity"
        if not self._identity_mass:
            # Eigenvalues of the circulant (1/6)(1, 4, 1) stencil, via rFFT of
            # its first column; all in [1/3, 1], so the matrix is SPD.
            col = np.zeros(self.dim)
            col[0] = 4.0 / 6.0
            col[1] = 1.0 / 6.0
            col[-1] = 1.0 / 6.0
            self._mass_eigs = np.fft.rfft(col).real

    # -- source ------------------------------------------------------------

    def _center(self, mu, t):
        return 0.5 * self.length + mu[1] * np.sin(2.0 * np.pi * t / self.period)

    def _profile(self, mu, t):
        """phi and helpers at each grid point for the current center."""
        kappa = (self.length / (2.0 * np.pi * mu[2])) ** 2
        theta = 2.0 * np.pi * (self.x - self._center(mu, t)) / self.length
        shape = np.cos(theta) - 1.0
        phi = np.exp(kappa * shape)
        # d phi / d xi where xi = x - x_c
        dphi = phi * kappa * (-np.sin(theta)) * (2.0 * np.pi / self.length)
        return phi, dphi, shape, kappa

    # -- residual and derivatives -------------------------------------------

    def residual(self, u, mu, t):
        phi, _, _, _ = self._profile(mu, t)
        flux = 0.25 * (np.roll(u, -1) ** 2 - np.roll(u, 1) ** 2)
        diff = np.roll(u, -1) - 2.0 * u + np.roll(u, 1)
        return (-flux / self.h + self.viscosity * diff / self.h**2
                - self.drag * u + mu[0] * phi)

    def jac_u_apply(self, u, mu, t, v):
        w = u * v
        conv = -(np.roll(w, -1) - np.roll(w, 1)) / (2.0 * self.h)
        diff = np.roll(v, -1) - 2.0 * v + np.roll(v, 1)
        return conv + self.viscosity * diff / self.h**2 - self.drag * v

    def jac_u_apply_transpose(self, u, mu, t, v):
        conv = u * (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * self.h)
        diff = np.roll(v, -1) - 2.0 * v + np.roll(v, 1)
        return conv + self.viscosity * diff / self.h**2 - self.drag * v

    def jac_mu_apply_transpose(self, u, mu, t, w):
        phi, dphi, shape, kappa = self._profile(mu, t)
        d_amp = phi @ w
        # Center moves with mu2; the profile sees xi = x - x_c.
        d_motion = (-np.sin(2.0 * np.pi * t / self.period) * mu[0]) * (dphi @ w)
        d_width = (-2.0 * kappa / mu[2]) * mu[0] * ((phi * shape) @ w)
        return np.array([d_amp, d_motion, d_width])

    # -- mass matrix ---------------------------------------------------------

    def mass_apply(self, v):
        if self._identity_mass:
            return np.array(v, dtype=float)
        return (4.0 * v + np.roll(v, 1) + np.roll(v, -1)) / 6.0

    def mass_solve(self, v):
        if self._identity_mass:
            return np.array(v, dtype=float)
        return np.fft.irfft(np.fft.rfft(v) / self._mass_eigs, n=self.dim)

    def mass_apply_transpose(self, v):
        return self.mass_apply(v)

    def mass_solve_transpose(self, v):
        return self.mass_solve(v)


class BurgersQoi(QuantityOfInterest):
    """Weighted volume h*sum(w u) (index 0) and energy h*sum(u^2) (index 1).

    The volume functional carries the sensor weight w = 1 + sin(2 pi x)
    rather than a uniform one: the plain spatial integral of u is invariant
    to where the source sits (the wrapped profile sums to the same value for
    every center on the uniform grid, up to exponentially small ripple), so
    its derivative with respect to the motion amplitude is structurally zero
    and useless for gradient verification. The asymmetric weight removes that
    invariance; every parameter then has a genuinely nonzero sensitivity.
    """

    n_qoi = 2

    def __init__(self, h, dim):
        self.h = h
        self.dim = dim
        x = h * np.arange(dim)
        self.weight = 1.0 + np.sin(2.0 * np.pi * x)

    def integrand(self, u, mu, t):
        return np.array([self.h * (self.weight * u).sum(),
                         self.h * (u**2).sum()])

    def integrand_grad_u(self, u, mu, t, w):
        return w[0] * self.h * self.weight + w[1] * 2.0 * self.h * u

    def integrand_grad_mu(self, u, mu, t):
        return np.zeros((2, 3))


def make_burgers_1d(n_cells, viscosity, period, mass="fem", drag=0.4):
    """Periodic viscous Burgers model and its two spatial-integral QoIs.

    Parameters
    ----------
    n_cells : int
        Grid points on [0, 1); at least 16.
    viscosity : float
        Positive diffusion coefficient.
    period : float
        Period of the source motion.
    mass : {'fem', 'identity'}
        Linear-element circulant mass matrix (default) or identity.
    drag : float
        Positive linear damping; required for periodic solvability.
    """
    model = PeriodicBurgers(n_cells, viscosity, period, mass=mass, drag=drag)
    return model, BurgersQoi(model.h, model.dim)
