"""Matrix-free Krylov kernels: GMRES and Arnoldi eigenvalue estimation.

Operators are supplied as callables wrapped in :class:`LinearOperator`; no
matrix is ever formed here. GMRES is the workhorse behind the implicit stage
solves, the primal shooting Jacobian and the periodic dual system, so it
keeps an explicit per-iteration residual history and an exact matvec count.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg


@dataclass
class LinearOperator:
    """A square linear map given by its action.

    Parameters
    ----------
    dim : int
        Dimension of the (square) operator.
    apply : callable
        v -> A v for v of shape (dim,).
    """

    dim: int
    apply: callable


@dataclass
class KrylovReport:
    """Outcome of one Krylov solve.

    ``residual_history`` starts at the initial residual norm and appends the
    (Givens-recurrence) residual of every iteration; it is non-increasing for
    full GMRES. ``final_residual`` is the explicitly recomputed true residual
    of the returned iterate. ``matvecs`` counts operator applications.
    """

    converged: bool
    iterations: int
    residual_history: list = field(default_factory=list)
    final_residual: float = 0.0
    matvecs: int = 0


def gmres(op, b, x0=None, tol=1e-8, atol=0.0, max_iter=None, restart=None):
    """Solve A x = b by (optionally restarted) GMRES.

    Modified Gram-Schmidt orthogonalization with one unconditional
    reorthogonalization pass; Givens rotations maintain the least-squares
    residual. Convergence target is max(tol * ||b||, atol). A vanishing
    Arnoldi extension (happy breakdown) means the current Krylov space
    contains the exact solution and terminates the solve. At the end of each
    cycle the true residual is recomputed; the solve only reports success
    when it meets the target.

    Parameters
    ----------
    op : LinearOperator
    b : ndarray
    x0 : ndarray or None
        Initial guess; None means zero (and saves one matvec).
    tol : float
        Relative residual target.
    atol : float
        Absolute residual target.
    max_iter : int or None
        Total iteration budget; defaults to op.dim.
    restart : int or None
        Cycle length; None runs full (unrestarted) GMRES.

    Returns
    -------
    (x, KrylovReport)
    """
    b = np.asarray(b, dtype=float)
    n = op.dim
    if b.shape != (n,):
        raise ValueError("right-hand side does not match operator dimension")
    if max_iter is None:
        max_iter = n
    target = max(tol * np.linalg.norm(b), atol)
    matvecs = 0
    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.array(x0, dtype=float)
        r = b - op.apply(x)
        matvecs += 1
    beta = np.linalg.norm(r)
    history = [beta]
    if beta <= target:
        return x, KrylovReport(True, 0, history, beta, matvecs)

    total = 0
    converged = False
    true_res = beta
    while True:
        m = min(restart if restart is not None else n, max_iter - total, n)
        if m <= 0:
            break
        v_basis = np.empty((m + 1, n))
        h = np.zeros((m + 1, m))
        cs = np.empty(m)
        sn = np.empty(m)
        g = np.zeros(m + 1)
        g[0] = beta
        v_basis[0] = r / beta
        width = 0
        happy = False
        hit_target = False
        for j in range(m):
            w = op.apply(v_basis[j])
            matvecs += 1
            scale = np.linalg.norm(w)
            # MGS with one reorthogonalization pass.
            for _ in range(2):
                for i in range(j + 1):
                    hij = v_basis[i] @ w
                    h[i, j] += hij
                    w -= hij * v_basis[i]
            h[j + 1, j] = np.linalg.norm(w)
            happy = h[j + 1, j] <= 1e-14 * max(scale, 1e-300)
            if not happy:
                v_basis[j + 1] = w / h[j + 1, j]
            # Apply the accumulated rotations, then form this column's.
            for i in range(j):
                hi, hip = h[i, j], h[i + 1, j]
                h[i, j] = cs[i] * hi + sn[i] * hip
                h[i + 1, j] = -sn[i] * hi + cs[i] * hip
            denom = np.hypot(h[j, j], h[j + 1, j])
            cs[j] = h[j, j] / denom if denom > 0 else 1.0
            sn[j] = h[j + 1, j] / denom if denom > 0 else 0.0
            h[j, j] = denom
            h[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            total += 1
            width = j + 1
            history.append(abs(g[j + 1]))
            hit_target = abs(g[j + 1]) <= target
            if hit_target or happy or total >= max_iter:
                break
        if width > 0:
            y = scipy.linalg.solve_triangular(h[:width, :width], g[:width])
            x = x + v_basis[:width].T @ y
        r = b - op.apply(x)
        matvecs += 1
        true_res = np.linalg.norm(r)
        if true_res <= target or happy:
            converged = True
            break
        if total >= max_iter:
            break
        beta = true_res
    return x, KrylovReport(converged, total, history, true_res, matvecs)


def arnoldi_eigs(op, k, m=None, tol=1e-10, max_restarts=300, dense_cutoff=30):
    """Largest-modulus eigenvalues of a matrix-free operator.

    Uses ARPACK's implicitly restarted Arnoldi iteration with a deterministic
    start vector. Operators too small for ARPACK's k < dim - 1 constraint (or
    below ``dense_cutoff``) are assembled by probing the canonical basis and
    handed to dense eigendecomposition instead.

    Parameters
    ----------
    op : LinearOperator
    k : int
        Number of eigenvalues requested; 1 <= k <= op.dim.
    m : int or None
        Arnoldi subspace dimension; defaults to max(2k + 2, 20), clipped to
        op.dim.
    tol : float
        ARPACK convergence tolerance.
    max_restarts : int
        ARPACK restart budget.
    dense_cutoff : int
        Dimensions at or below this are handled densely.

    Returns
    -------
    list of (eigenvalue, residual)
        Sorted by descending modulus (conjugate pairs adjacent). ``residual``
        is ||A v - lambda v||_2 for the unit Ritz vector, or NaN for
        eigenvalues ARPACK failed to converge (dense path residuals are
        roundoff-level).
    """
    n = op.dim
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, op.dim]")
    if m is None:
        m = max(2 * k + 2, 20)
    m = min(m, n)

    def _sorted_pairs(vals, vecs):
        order = np.lexsort((-vals.imag, -np.abs(vals)))
        out = []
        for idx in order[:k]:
            v = vecs[:, idx]
            nv = np.linalg.norm(v)
            res = _residual(op, vals[idx], v / nv)
            out.append((complex(vals[idx]), res))
        return out

    if n <= dense_cutoff or k >= n - 1:
        mat = np.empty((n, n))
        eye = np.eye(n)
        for j in range(n):
            mat[:, j] = op.apply(eye[j])
        vals, vecs = np.linalg.eig(mat)
        return _sorted_pairs(vals, vecs)

    scipy_op = scipy.sparse.linalg.LinearOperator((n, n), matvec=op.apply)
    v0 = np.ones(n) / np.sqrt(n)
    try:
        vals, vecs = scipy.sparse.linalg.eigs(
            scipy_op, k=k, which="LM", ncv=m, tol=tol, maxiter=max_restarts, v0=v0
        )
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        missing = k - len(vals)
        pairs = _sorted_pairs(vals, vecs) if len(vals) else []
        pairs += [(complex(np.nan, np.nan), float("nan"))] * missing
        return pairs
    return _sorted_pairs(vals, vecs)


def _residual(op, lam, v):
    """||A v - lam v|| for a unit vector v, evaluating A on real/imag parts."""
    if np.iscomplexobj(v) and np.abs(v.imag).max() > 0.0:
        av = op.apply(v.real.copy()) + 1j * op.apply(v.imag.copy())
    else:
        av = op.apply(np.ascontiguousarray(v.real))
    return float(np.linalg.norm(av - lam * v))


def probe_linearity(op, rng, n_probes=3, rtol=1e-12):
    """Spot-check that op.apply is linear on random probes; returns max defect.

    Used by tests; raises nothing itself.
    """
    worst = 0.0
    for _ in range(n_probes):
        x = rng.standard_normal(op.dim)
        y = rng.standard_normal(op.dim)
        a, b = rng.standard_normal(2)
        lhs = op.apply(a * x + b * y)
        rhs = a * op.apply(x) + b * op.apply(y)
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
        worst = max(worst, np.linalg.norm(lhs - rhs) / scale)
    return worst
