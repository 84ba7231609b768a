"""Floquet stability of discrete periodic solutions.

The stability of a periodic orbit is decided by the spectrum of the
one-period sensitivity (monodromy) operator d(u^(Nt))/d(u^(0)): the orbit is
linearly stable when every eigenvalue lies inside the unit circle. The
operator is only available through tangent propagations, so its dominant
eigenvalues are estimated with the implicitly restarted Arnoldi iteration.
"""

from dataclasses import dataclass

import numpy as np

from .dirk import DEFAULT_STAGE_TOL
from .krylov import LinearOperator, arnoldi_eigs
from .sensitivity import StageOperators, forward_sensitivity_apply


@dataclass
class StabilityReport:
    """Dominant Floquet multipliers of one periodic trajectory.

    ``eigenvalues`` are sorted by descending modulus with conjugate pairs
    adjacent; ``residuals[j]`` is ||A v - lambda v|| for the unit Ritz
    vector (NaN when the eigensolver failed to converge that pair).
    ``stable`` is True when all requested multipliers converged and the
    spectral radius estimate is at most 1 - margin, False when a converged
    multiplier violates that bound, and None (indeterminate) when
    unconverged entries keep the question open.
    """

    eigenvalues: list
    residuals: list
    spectral_radius: float
    stable: object
    margin: float
    n_propagations: int

    @property
    def converged(self):
        return [not np.isnan(lam.real) for lam in self.eigenvalues]


def analyze_stability(model, tableau, trajectory, mu, k=20, tol=1e-8,
                      margin=1e-8, subspace=None, stage_tol=DEFAULT_STAGE_TOL):
    """Estimate the k dominant Floquet multipliers of a periodic trajectory.

    Parameters
    ----------
    model, tableau, trajectory, mu
        The frozen periodic solution to linearize about.
    k : int
        Number of multipliers requested (clipped to the state dimension).
    tol : float
        Eigensolver tolerance.
    margin : float
        Stability is asserted only when the spectral radius is at most
        1 - margin, so neutral multipliers are never called stable.
    subspace : int or None
        Arnoldi subspace dimension; default max(2k + 2, 20).
    stage_tol : float
        Tolerance of the linearized stage solves inside each propagation.

    Returns
    -------
    StabilityReport
    """
    k = int(min(k, model.dim))
    if k < 1:
        raise ValueError("k must be at least 1")
    ops = StageOperators(model, tableau, trajectory, mu, tol=stage_tol)
    counter = {"n": 0}

    def monodromy_apply(v):
        counter["n"] += 1
        return forward_sensitivity_apply(model, tableau, trajectory, mu, v,
                                         operators=ops)

    pairs = arnoldi_eigs(LinearOperator(model.dim, monodromy_apply), k,
                         m=subspace, tol=tol)
    eigenvalues = [lam for lam, _ in pairs]
    residuals = [res for _, res in pairs]
    moduli = [abs(lam) for lam in eigenvalues if not np.isnan(lam.real)]
    spectral_radius = max(moduli) if moduli else float("nan")
    all_converged = len(moduli) == len(eigenvalues)
    if moduli and spectral_radius > 1.0 - margin:
        stable = False
    elif all_converged:
        stable = True
    else:
        stable = None
    return StabilityReport(eigenvalues=eigenvalues, residuals=residuals,
                           spectral_radius=spectral_radius, stable=stable,
                           margin=margin, n_propagations=counter["n"])
