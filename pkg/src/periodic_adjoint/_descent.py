"""Armijo-backtracking descent loops (steepest descent and L-BFGS).

Shared by the optimization-based shooting solver (over initial conditions)
and the constrained design optimizer (over parameters). The line search is
plain backtracking with the sufficient-decrease constant c1 = 1e-4 and step
halving; objective evaluations that fail (callback returns None) are treated
as +inf so the search backs off instead of aborting.

Box bounds are handled by gradient projection. Coordinates sitting at a
bound with the gradient pushing outward are frozen out of the search
direction, trial points are clipped, and sufficient decrease is measured
along the realized step x_trial - x rather than the raw direction. Curvature
pairs collected while the active set changes can still aim uphill within the
free subspace; a failed search therefore drops the memory and retries along
the projected gradient before giving up.
"""

from dataclasses import dataclass, field

import numpy as np

ARMIJO_C1 = 1e-4


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    status: str  # 'converged' | 'max-iter' | 'line-search-failure'
    n_evals: int = 0
    f_history: list = field(default_factory=list)


def _project(x, bounds):
    if bounds is None:
        return x
    lo, hi = bounds
    return np.clip(x, lo, hi)


def minimize_descent(fg, x0, method="l-bfgs", memory=10, max_iter=200,
                     grad_tol=0.0, stop=None, bounds=None, on_iterate=None,
                     max_halvings=60):
    """Minimize f via steepest descent or limited-memory BFGS.

    Parameters
    ----------
    fg : callable
        x -> (f, g) or None when the evaluation fails.
    x0 : ndarray
        Start point (projected into bounds if given).
    method : {'l-bfgs', 'steepest-descent'}
    memory : int
        History length for L-BFGS.
    max_iter : int
        Maximum accepted steps.
    grad_tol : float
        Converged when the (projected) gradient norm falls at or below this.
    stop : callable or None
        Extra termination test (x, f, g) -> bool, checked at every accepted
        iterate including the start.
    bounds : (lo, hi) or None
        Box bounds; iterates and trials are projected.
    on_iterate : callable or None
        (k, x, f, g) called at every accepted iterate including the start.

    Returns
    -------
    DescentResult
    """
    if method not in ("l-bfgs", "steepest-descent"):
        raise ValueError(f"unknown descent method {method!r}")
    x = _project(np.array(x0, dtype=float), bounds)
    n_evals = 0
    out = fg(x)
    n_evals += 1
    if out is None:
        raise ValueError("objective evaluation failed at the start point")
    f, g = out[0], np.asarray(out[1], dtype=float)
    f_history = [f]
    pairs = []  # (s, y, 1/(y@s)) for L-BFGS
    status = "max-iter"
    k = 0
    if on_iterate is not None:
        on_iterate(0, x, f, g)

    def _pg_norm(x, g):
        return np.linalg.norm(x - _project(x - g, bounds))

    if _pg_norm(x, g) <= grad_tol or (stop is not None and stop(x, f, g)):
        return DescentResult(x, f, g, 0, "converged", n_evals, f_history)

    for k in range(1, max_iter + 1):
        if bounds is None:
            pinned = None
            g_eff = g
        else:
            lo, hi = bounds
            pinned = (((x - lo <= 1e-12 * np.maximum(1.0, np.abs(lo))) & (g > 0.0))
                      | ((hi - x <= 1e-12 * np.maximum(1.0, np.abs(hi))) & (g < 0.0)))
            g_eff = np.where(pinned, 0.0, g)

        def _direction(use_pairs):
            if method == "steepest-descent" or not use_pairs:
                return -g_eff, 1.0 / max(1.0, np.linalg.norm(g_eff)), False
            # Two-loop recursion with gamma-scaled initial Hessian.
            q = g_eff.copy()
            alphas = []
            for s, y, rho in reversed(use_pairs):
                a_i = rho * (s @ q)
                alphas.append(a_i)
                q -= a_i * y
            s, y, _ = use_pairs[-1]
            gamma = (s @ y) / (y @ y)
            r = gamma * q
            for (s, y, rho), a_i in zip(use_pairs, reversed(alphas)):
                b_i = rho * (y @ r)
                r += (a_i - b_i) * s
            d = -r if pinned is None else np.where(pinned, 0.0, -r)
            if g_eff @ d >= 0.0:
                return -g_eff, 1.0 / max(1.0, np.linalg.norm(g_eff)), False
            return d, 1.0, True

        def _search(d, alpha):
            nonlocal n_evals
            for _ in range(max_halvings + 1):
                x_trial = _project(x + alpha * d, bounds)
                step = x_trial - x
                if np.linalg.norm(step) == 0.0:
                    return None
                out = fg(x_trial)
                n_evals += 1
                if out is not None:
                    f_trial, g_trial = out[0], np.asarray(out[1], dtype=float)
                    # For projected steps the decrease is measured along the
                    # actual step, not the raw direction, and ascent along the
                    # realized step is rejected outright.
                    gstep = g @ step
                    if gstep < 0.0 and f_trial <= f + ARMIJO_C1 * gstep:
                        return x_trial, f_trial, g_trial
                alpha *= 0.5
            return None

        d, alpha, used_memory = _direction(pairs)
        hit = _search(d, alpha)
        if hit is None and used_memory:
            # Stale curvature aimed uphill inside the free subspace; restart
            # from the projected gradient.
            pairs.clear()
            d, alpha, _ = _direction(pairs)
            hit = _search(d, alpha)
        if hit is None:
            status = "line-search-failure"
            k -= 1
            break
        x_trial, f_trial, g_trial = hit

        s_vec = x_trial - x
        y_vec = g_trial - g
        x, f, g = x_trial, f_trial, g_trial
        f_history.append(f)
        if method == "l-bfgs":
            curv = s_vec @ y_vec
            if curv > 1e-10 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
                pairs.append((s_vec, y_vec, 1.0 / curv))
                if len(pairs) > memory:
                    pairs.pop(0)
        if on_iterate is not None:
            on_iterate(k, x, f, g)
        if _pg_norm(x, g) <= grad_tol or (stop is not None and stop(x, f, g)):
            status = "converged"
            break

    return DescentResult(x, f, g, k, status, n_evals, f_history)
