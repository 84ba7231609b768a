"""Butcher tableaus for diagonally implicit Runge-Kutta schemes.

Only lower-triangular (DIRK) tableaus are supported: stage i may depend on
stages 1..i, so each step reduces to a sequence of single-stage implicit
solves.
"""

from dataclasses import dataclass, field

import numpy as np

_ATOL = 1e-14


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients (a, b, c) of an s-stage DIRK scheme.

    Parameters
    ----------
    name : str
        Identifier used in configs and reports.
    a : ndarray, shape (s, s)
        Stage coefficient matrix, lower triangular (diagonal included).
    b : ndarray, shape (s,)
        Quadrature weights, summing to one.
    c : ndarray, shape (s,)
        Abscissae, equal to the row sums of ``a``.
    order : int
        Classical order of accuracy, verified at construction.
    """

    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        c = np.array(self.c, dtype=float)
        for arr in (a, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        s = b.size
        if a.shape != (s, s) or c.shape != (s,):
            raise ValueError("tableau arrays have inconsistent shapes")
        if not (np.isfinite(a).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise ValueError("tableau entries must be finite")
        if np.any(np.triu(a, 1) != 0.0):
            raise ValueError("tableau is not lower triangular (not a DIRK scheme)")
        if abs(b.sum() - 1.0) > _ATOL:
            raise ValueError("quadrature weights do not sum to one")
        if np.max(np.abs(a.sum(axis=1) - c)) > _ATOL:
            raise ValueError("abscissae are not the row sums of a")
        residuals = order_condition_residuals(a, b, c, self.order)
        if max(abs(r) for r in residuals) > _ATOL:
            raise ValueError(
                f"tableau {self.name!r} violates its order-{self.order} conditions"
            )

    @property
    def n_stages(self):
        return self.b.size


def order_condition_residuals(a, b, c, order):
    """Residuals of the classical order conditions up to the given order.

    Covers order <= 3, which is all this package ships. Returned as a flat
    list; every entry is zero (to roundoff) for a scheme of that order.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    res = [b.sum() - 1.0]
    if order >= 2:
        res.append(b @ c - 0.5)
    if order >= 3:
        res.append(b @ c**2 - 1.0 / 3.0)
        res.append(b @ (a @ c) - 1.0 / 6.0)
    if order >= 4:
        raise ValueError("order conditions implemented only up to order 3")
    return res


def stability_function(tableau, z):
    """Scalar stability function R(z) = 1 + z b^T (I - z A)^{-1} 1.

    Applying one step of the scheme to u' = lam*u with z = lam*dt multiplies
    the state by R(z). Used as an oracle in tests and for stiff-decay checks.
    """
    z = complex(z)
    s = tableau.n_stages
    mat = np.eye(s) - z * tableau.a
    w = np.linalg.solve(mat, np.ones(s))
    return 1.0 + z * (tableau.b @ w)


def _backward_euler():
    return ButcherTableau(
        name="backward-euler",
        a=np.array([[1.0]]),
        b=np.array([1.0]),
        c=np.array([1.0]),
        order=1,
    )


def _sdirk2():
    # L-stable two-stage SDIRK; gamma solves gamma^2 - 2 gamma + 1/2 = 0.
    gamma = 1.0 - 1.0 / np.sqrt(2.0)
    return ButcherTableau(
        name="sdirk2",
        a=np.array([[gamma, 0.0], [1.0 - gamma, gamma]]),
        b=np.array([1.0 - gamma, gamma]),
        c=np.array([gamma, 1.0]),
        order=2,
    )


def _dirk3():
    # L-stable three-stage SDIRK of order 3. The diagonal coefficient is the
    # root of x^3 - 3x^2 + (3/2)x - 1/6 lying in (1/6, 1/2); the value below
    # is polished to double precision at construction.
    alpha = 0.435866521508459
    for _ in range(4):
        p = alpha**3 - 3.0 * alpha**2 + 1.5 * alpha - 1.0 / 6.0
        dp = 3.0 * alpha**2 - 6.0 * alpha + 1.5
        alpha -= p / dp
    tau = (1.0 + alpha) / 2.0
    b1 = -(6.0 * alpha**2 - 16.0 * alpha + 1.0) / 4.0
    b2 = (6.0 * alpha**2 - 20.0 * alpha + 5.0) / 4.0
    return ButcherTableau(
        name="dirk3",
        a=np.array(
            [
                [alpha, 0.0, 0.0],
                [tau - alpha, alpha, 0.0],
                [b1, b2, alpha],
            ]
        ),
        b=np.array([b1, b2, alpha]),
        c=np.array([alpha, tau, 1.0]),
        order=3,
    )


_BUILDERS = {
    "backward-euler": _backward_euler,
    "sdirk2": _sdirk2,
    "dirk3": _dirk3,
}


def tableau_library(name):
    """Return a named built-in tableau.

    Known names: 'backward-euler', 'sdirk2', 'dirk3'. Raises ValueError for
    anything else, listing the valid names.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        known = ", ".join(sorted(_BUILDERS))
        raise ValueError(f"unknown tableau {name!r}; known tableaus: {known}") from None
    return builder()
