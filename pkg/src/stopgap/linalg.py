"""Dense linear-algebra helpers: operator norms, guarded pseudo-inverses,
orthonormal bases of subspaces."""

import numpy as np

from .errors import ConvergenceError, DegenerateProblemError

# relative cutoff below which singular/eigen values count as zero
RANK_RTOL = 1e-10


def operator_norm(A, rtol=1e-9, max_iters=10_000):
    """Spectral norm of a matrix by power iteration on A^T A.

    Parameters
    ----------
    A : (m, n) ndarray
    rtol : float
        Relative change of the Rayleigh quotient at which to stop.
    max_iters : int
        Iteration budget; exceeding it raises ConvergenceError.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0 or not np.any(A):
        raise DegenerateProblemError("operator norm of a zero matrix")
    # deterministic start in the direction of the largest column
    v = A[np.argmax(np.abs(A).sum(axis=1))].copy()
    if not np.any(v):
        v = np.ones(A.shape[1])
    v /= np.linalg.norm(v)
    sq = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ v)
        sq_new = v @ w
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v fell in the kernel; restart from a dense vector
            v = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
            continue
        v = w / nw
        if abs(sq_new - sq) <= rtol * max(sq_new, 1e-300):
            return float(np.sqrt(sq_new))
        sq = sq_new
    raise ConvergenceError("power iteration did not converge in %d iterations" % max_iters)


def eigh_psd(G):
    """Eigendecomposition of a symmetric PSD matrix with negatives clipped.

    Returns (lam, V) with G = V diag(lam) V^T and lam >= 0 ascending.
    """
    lam, V = np.linalg.eigh(0.5 * (G + G.T))
    return np.clip(lam, 0.0, None), V


def positive_eigvals(w):
    """Eigenvalues with magnitude above the relative rank cutoff."""
    w = np.asarray(w, dtype=float)
    scale = np.abs(w).max() if w.size else 0.0
    return w[np.abs(w) > RANK_RTOL * scale]


def min_abs_nonzero_eig(M):
    """Smallest |lambda| over eigenvalues of a symmetric M above the cutoff."""
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    kept = positive_eigvals(w)
    if kept.size == 0:
        raise DegenerateProblemError("all eigenvalues are numerically zero")
    return float(np.abs(kept).min())


def pinv_solve(M, rhs):
    """Least-squares / pseudo-inverse solution of M z = rhs with rank cutoff."""
    z, *_ = np.linalg.lstsq(M, rhs, rcond=RANK_RTOL)
    return z


def orthonormal_basis(S, warn=None):
    """Orthonormal basis of the column span of S (QR with rank filtering).

    Parameters
    ----------
    S : (n, k) ndarray whose columns span the target subspace.
    warn : callable or None
        Called with a message when S is rank deficient.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    U, sv, _ = np.linalg.svd(S, full_matrices=False)
    r = int(np.sum(sv > RANK_RTOL * (sv[0] if sv.size else 1.0)))
    if warn is not None and r < S.shape[1]:
        warn("spanning set is rank deficient (%d < %d); basis recomputed" % (r, S.shape[1]))
    return U[:, :r]


def null_space_basis(M):
    """Orthonormal basis of ker(M), possibly empty (n, 0)."""
    U, sv, Vt = np.linalg.svd(M)
    tol = RANK_RTOL * (sv[0] if sv.size else 1.0)
    r = int(np.sum(sv > tol))
    return Vt[r:].T
