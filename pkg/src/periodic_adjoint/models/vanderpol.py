"""Periodically forced Van der Pol oscillator.

    du1/dt = u2
    du2/dt = mu1 (1 - u1^2) u2 - u1 + mu2 sin(2 pi t / T) + mu3 cos(4 pi t / T)

with parameters mu = (damping, first-harmonic forcing amplitude,
second-harmonic forcing amplitude) and identity mass matrix. The two outputs
are the period averages of the energy density u1^2 + u2^2 and of the forcing
power u2 f(mu, t); the second plays the role of the thrust-like constrained
quantity in the optimization demo.

Parameter choice matters for nondegeneracy. With pure first-harmonic forcing
(mu3 = 0) the entrained orbit inherits the symmetry u(t + T/2) = -u(t), which
forces the mean of u1, the derivative of both outputs with respect to a
forcing phase, and the derivative with respect to mu3 itself all to vanish
identically. A second-harmonic amplitude breaks that symmetry whenever it is
nonzero, so gradient verification should be run at mu3 != 0.
"""

import numpy as np

from .base import QuantityOfInterest, SemiDiscreteModel


class ForcedVanDerPol(SemiDiscreteModel):
    dim = 2
    n_params = 3
    has_dense_jacobian = True

    def __init__(self, period):
        if not period > 0.0:
            raise ValueError("period must be positive")
        self.period = float(period)
        self.default_mu = np.array([0.6, 0.8, 0.0])

    def forcing(self, mu, t):
        w = 2.0 * np.pi * t / self.period
        return mu[1] * np.sin(w) + mu[2] * np.cos(2.0 * w)

    def residual(self, u, mu, t):
        u1, u2 = u
        return np.array(
            [u2, mu[0] * (1.0 - u1**2) * u2 - u1 + self.forcing(mu, t)]
        )

    def jac_u_matrix(self, u, mu, t):
        u1, u2 = u
        return np.array(
            [[0.0, 1.0], [-2.0 * mu[0] * u1 * u2 - 1.0, mu[0] * (1.0 - u1**2)]]
        )

    def jac_u_apply(self, u, mu, t, v):
        return self.jac_u_matrix(u, mu, t) @ v

    def jac_u_apply_transpose(self, u, mu, t, v):
        return self.jac_u_matrix(u, mu, t).T @ v

    def jac_mu_apply_transpose(self, u, mu, t, w):
        u1, u2 = u
        ang = 2.0 * np.pi * t / self.period
        return np.array(
            [
                (1.0 - u1**2) * u2 * w[1],
                np.sin(ang) * w[1],
                np.cos(2.0 * ang) * w[1],
            ]
        )

    def mass_matrix(self):
        return np.eye(2)


class VanDerPolQoi(QuantityOfInterest):
    """Period averages of u1^2 + u2^2 (index 0) and of the forcing power
    u2 f(mu, t) (index 1). Both integrands carry a 1/T factor so the outputs
    are amplitude-like and do not scale with the period. The power integrand
    depends on mu explicitly, exercising the explicit part of the gradient."""

    n_qoi = 2

    def __init__(self, period):
        self.period = float(period)

    def integrand(self, u, mu, t):
        w = 2.0 * np.pi * t / self.period
        f = mu[1] * np.sin(w) + mu[2] * np.cos(2.0 * w)
        return np.array([u[0] ** 2 + u[1] ** 2, u[1] * f]) / self.period

    def integrand_grad_u(self, u, mu, t, w):
        ang = 2.0 * np.pi * t / self.period
        f = mu[1] * np.sin(ang) + mu[2] * np.cos(2.0 * ang)
        return (w[0] * np.array([2.0 * u[0], 2.0 * u[1]])
                + w[1] * np.array([0.0, f])) / self.period

    def integrand_grad_mu(self, u, mu, t):
        ang = 2.0 * np.pi * t / self.period
        g = np.zeros((2, 3))
        g[1, 1] = u[1] * np.sin(ang) / self.period
        g[1, 2] = u[1] * np.cos(2.0 * ang) / self.period
        return g


def make_forced_vdp(period):
    """Forced Van der Pol model and its two QoIs."""
    return ForcedVanDerPol(period), VanDerPolQoi(period)
