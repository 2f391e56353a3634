"""Benchmark problem families: the deterministic 1D program, Gaussian and
Toeplitz-covariance least squares, distributed least squares in consensus
form, nonnegative quadratic programming via variable splitting, and basis
pursuit.

All random generation is seeded through numpy Generators so instances are
reproducible byte for byte.
"""

import os
import warnings

import numpy as np
from scipy.linalg import toeplitz

from .errors import ConfigError, DegenerateProblemError, DimensionMismatchError
from .linalg import pinv_solve
from .objectives import L1Norm, LeastSquaresObjective, NonnegativeQuadratic
from .problem import AffineConstraint, ProblemInstance, ReferenceSolution

DATA_DIR_ENV = "STOPGAP_DATA_DIR"


def _ls_reference(Q, c, A, b, provenance="high-accuracy-solve"):
    """Reference saddle point of a linearly-constrained LS problem from its
    stationarity system [[Q^T Q, A^T], [A, 0]] [x; y] = [Q^T c; b]."""
    n = Q.shape[1]
    m = A.shape[0]
    gram = Q.T @ Q
    M = np.block([[gram, A.T], [A, np.zeros((m, m))]])
    rhs = np.concatenate([Q.T @ c, b])
    sol = pinv_solve(M, rhs)
    x_star = sol[:n]
    feas = np.linalg.norm(A @ x_star - b)
    stat = np.linalg.norm(M @ sol - rhs)
    if feas > 1e-8 * (1.0 + np.linalg.norm(b)) or stat > 1e-6 * (1.0 + np.linalg.norm(rhs)):
        return None, sol[n:]
    f_star = 0.5 * float(np.linalg.norm(Q @ x_star - c) ** 2)
    return ReferenceSolution(x_star=x_star, f_star=f_star, provenance=provenance), sol[n:]


def make_1d():
    """min 0.5*(x/9 - 2)^2 subject to 9x = 7; the feasibility condition
    pins x* = 7/9."""
    Q = np.array([[1.0 / 9.0]])
    c = np.array([2.0])
    A = np.array([[9.0]])
    b = np.array([7.0])
    x_star = np.array([7.0 / 9.0])
    f_star = 0.5 * float((x_star[0] / 9.0 - 2.0) ** 2)
    # stationarity Q^T(Q x* - c) + A^T y* = 0 gives the matching dual
    y_star = np.array([-(x_star[0] / 81.0 - 2.0 / 9.0) / 9.0])
    return ProblemInstance(
        objective=LeastSquaresObjective(Q, c),
        constraint=AffineConstraint(A, b),
        reference=ReferenceSolution(x_star=x_star, f_star=f_star, provenance="analytic"),
        label="1d", family="ls", extras={"y_star": y_star})


def make_iidg(n=20, m=10, seed=0):
    """LC-LS with i.i.d. standard-normal Q, A (m x n) and c, b (m,)."""
    if n < 1 or m < 1:
        raise ConfigError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((m, n))
    c = rng.standard_normal(m)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    ref, y_star = _ls_reference(Q, c, A, b)
    return ProblemInstance(
        objective=LeastSquaresObjective(Q, c),
        constraint=AffineConstraint(A, b),
        reference=ref, label=f"iidg(n={n},m={m},seed={seed})", family="ls",
        extras={"y_star": y_star} if ref is not None else {})


def toeplitz_covariance(first_row):
    """Symmetric Toeplitz matrix from its first row (constant diagonals)."""
    first_row = np.asarray(first_row, dtype=float)
    if first_row.ndim != 1:
        raise ConfigError("covariance factory expects a 1-D first row")
    return toeplitz(first_row)


def make_ntc(n=20, m=10, seed=0, rho=0.5, first_row_a=None, first_row_q=None):
    """LC-LS with A = Sigma_a X_a, Q = Sigma_q X_q where the Sigmas are
    symmetric Toeplitz covariances (default first row 1, rho, rho^2, ...)."""
    rng = np.random.default_rng(seed)
    if first_row_a is None:
        first_row_a = rho ** np.arange(m)
    if first_row_q is None:
        first_row_q = rho ** np.arange(m)
    Sa = toeplitz_covariance(first_row_a)
    Sq = toeplitz_covariance(first_row_q)
    for S, name in ((Sa, "Sigma_a"), (Sq, "Sigma_q")):
        if S.shape != (m, m):
            raise DimensionMismatchError(f"{name} must be {m}x{m}")
        if np.linalg.eigvalsh(S).min() <= 0:
            raise DegenerateProblemError(f"{name} is not positive definite")
    Q = Sq @ rng.standard_normal((m, n))
    c = rng.standard_normal(m)
    A = Sa @ rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    ref, y_star = _ls_reference(Q, c, A, b)
    return ProblemInstance(
        objective=LeastSquaresObjective(Q, c),
        constraint=AffineConstraint(A, b),
        reference=ref, label=f"ntc(n={n},m={m},seed={seed},rho={rho})", family="ls",
        extras={"y_star": y_star} if ref is not None else {})


def read_libsvm(path):
    """LIBSVM regression format: 'label idx:val idx:val ...', 1-based
    indices, missing entries zero.  Returns (features, labels)."""
    rows = []
    labels = []
    width = 0
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                labels.append(float(parts[0]))
                entries = []
                for tok in parts[1:]:
                    idx, val = tok.split(":")
                    entries.append((int(idx), float(val)))
            except ValueError as exc:
                raise ConfigError(f"{path}:{ln}: malformed LIBSVM entry ({exc})") from exc
            for idx, _ in entries:
                if idx < 1:
                    raise ConfigError(f"{path}:{ln}: indices are 1-based")
                width = max(width, idx)
            rows.append(entries)
    X = np.zeros((len(rows), width))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    return X, np.asarray(labels)


def make_do(data_path=None, M=3, n=14, m=84, seed=0):
    """Distributed least squares: M data blocks coupled by a consensus chain
    x_i = x_{i+1}.

    Block data comes from a LIBSVM regression file when available (explicit
    ``data_path``, else $STOPGAP_DATA_DIR/bodyfat); otherwise a synthetic
    Gaussian stand-in of the same shape is generated.  The reference solves
    the aggregated normal equations (sum Q_i^T Q_i) x = sum Q_i^T c_i and is
    replicated across blocks.
    """
    if M < 2:
        raise ConfigError("the consensus chain needs M >= 2 blocks")
    blocks = None
    if data_path is None:
        env = os.environ.get(DATA_DIR_ENV)
        if env:
            candidate = os.path.join(env, "bodyfat")
            if os.path.exists(candidate):
                data_path = candidate
    if data_path is not None:
        X, yv = read_libsvm(data_path)
        n = X.shape[1]
        m = X.shape[0] // M
        if X.shape[0] % M:
            warnings.warn(f"dropping {X.shape[0] % M} trailing rows so that "
                          f"{X.shape[0]} points split into {M} blocks")
        blocks = [(X[i * m:(i + 1) * m], yv[i * m:(i + 1) * m]) for i in range(M)]
        label = f"do(libsvm,M={M})"
    else:
        rng = np.random.default_rng(seed)
        blocks = [(rng.standard_normal((m, n)), rng.standard_normal(m)) for _ in range(M)]
        label = f"do(synthetic,M={M},n={n},m={m},seed={seed})"

    Qs = [B[0] for B in blocks]
    cs = [B[1] for B in blocks]
    bigQ = np.zeros((M * m, M * n))
    for i, Qi in enumerate(Qs):
        bigQ[i * m:(i + 1) * m, i * n:(i + 1) * n] = Qi
    bigc = np.concatenate(cs)
    A = np.zeros(((M - 1) * n, M * n))
    eye = np.eye(n)
    for i in range(M - 1):
        A[i * n:(i + 1) * n, i * n:(i + 1) * n] = eye
        A[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = -eye
    b = np.zeros((M - 1) * n)

    gram = sum(Qi.T @ Qi for Qi in Qs)
    rhs = sum(Qi.T @ ci for Qi, ci in zip(Qs, cs))
    x_hat = pinv_solve(gram, rhs)
    if np.linalg.norm(gram @ x_hat - rhs) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
        raise DegenerateProblemError("aggregated normal equations are inconsistent")
    X_star = np.tile(x_hat, M)
    f_star = 0.5 * float(np.linalg.norm(bigQ @ X_star - bigc) ** 2)
    y_star = pinv_solve(A.T, -(bigQ.T @ (bigQ @ X_star - bigc)))
    return ProblemInstance(
        objective=LeastSquaresObjective(bigQ, bigc),
        constraint=AffineConstraint(A, b),
        reference=ReferenceSolution(x_star=X_star, f_star=f_star, provenance="normal-equations"),
        label=label, family="ls",
        extras={"M": M, "block_shape": (m, n), "y_star": y_star})


def make_pqp(n=20, m=10, seed=0):
    """Nonnegative LS via splitting: variables X = (x, xt), constraint
    [[A, 0], [Id, -Id]] X = (b, 0), objective LS(x) + indicator(xt >= 0)."""
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((m, n))
    c = rng.standard_normal(m)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    At = np.block([[A, np.zeros((m, n))], [np.eye(n), -np.eye(n)]])
    B = np.concatenate([b, np.zeros(n)])
    return ProblemInstance(
        objective=NonnegativeQuadratic(Q, c),
        constraint=AffineConstraint(At, B),
        reference=None, label=f"pqp(n={n},m={m},seed={seed})", family="qp",
        extras={"base_constraint": (A, b)})


def make_bp(n=20, m=10, seed=0):
    """Basis pursuit: min ||x||_1 subject to Ax = b, Gaussian data."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return ProblemInstance(
        objective=L1Norm(n),
        constraint=AffineConstraint(A, b),
        reference=None, label=f"bp(n={n},m={m},seed={seed})", family="bp")


FAMILIES = {
    "1d": make_1d,
    "iidg": make_iidg,
    "ntc": make_ntc,
    "do": make_do,
    "pqp": make_pqp,
    "bp": make_bp,
}


def make_instance(name, **kwargs):
    """Factory by family name; unknown names raise ConfigError."""
    try:
        factory = FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown instance family {name!r}; "
                          f"choose from {sorted(FAMILIES)}") from None
    return factory(**kwargs)
