"""Objective oracles: evaluation, proximal maps, Fenchel conjugates,
conjugate-domain projections and minimum-norm stationarity residuals for the
objectives used by the benchmark problems.

Every oracle is immutable after construction; prox/projection calls are pure,
so instances can be shared freely across workers.
"""

import math

import numpy as np

from .errors import DegenerateProblemError, DimensionMismatchError
from .linalg import RANK_RTOL, eigh_psd

INF = float("inf")


def _check_dim(v, n, what):
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatchError(f"{what}: expected shape ({n},), got {v.shape}")
    return v


class ObjectiveOracle:
    """Behaviour contract shared by all objectives.

    Subclasses provide: ``__call__`` (value, possibly +inf), ``prox``,
    ``conj`` (value of f*, possibly +inf), ``project_conj_domain``,
    ``prox_conj`` and ``stationarity_residual`` (squared minimum-norm element
    of df(x)+g, possibly +inf), plus the constants below when they exist.
    """

    dim = None
    smooth_lipschitz = None       # L for smooth f, else None
    conj_lipschitz = None         # L_{f*} on dom f*, else None
    conj_part_lipschitz = None    # L_{f1*} of the Lipschitz conjugate part
    conj_grad_lipschitz = None    # L_g of the smooth conjugate part
    separable_conj = False        # whether the T7 assumption set holds

    def __call__(self, x):
        raise NotImplementedError

    def prox(self, s, v):
        raise NotImplementedError

    def conj(self, mu, tol=1e-8):
        raise NotImplementedError

    def project_conj_domain(self, mu):
        raise NotImplementedError

    def prox_conj(self, s, w):
        raise NotImplementedError

    def stationarity_residual(self, x, g):
        raise NotImplementedError

    def value_diff(self, x, p):
        """f(x) - f(p), default implementation; subclasses override with a
        cancellation-free form (the difference can be ~1e-16 while the values
        are O(1), and criteria floors live at exactly that scale)."""
        return self(x) - self(p)


class LeastSquaresData:
    """Data of f(x) = 0.5*||Q x - c||^2 with cached spectral factors.

    Caches Q^T Q, Q^T c and the eigendecomposition Q^T Q = V diag(lam) V^T
    used for prox solves, pseudo-inverses and range projections.  Rank is
    decided by the relative cutoff RANK_RTOL on eigenvalues.
    """

    def __init__(self, design, target):
        self.design = np.atleast_2d(np.asarray(design, dtype=float))
        mq, n = self.design.shape
        self.target = _check_dim(target, mq, "target")
        self.n = n
        self.gram = self.design.T @ self.design
        self.qtc = self.design.T @ self.target
        self.lam, self.V = eigh_psd(self.gram)
        scale = self.lam.max() if self.lam.size else 0.0
        self.pos = self.lam > RANK_RTOL * max(scale, 1e-300)
        # coordinates of (Q^T Q)^dagger Q^T c in the eigenbasis
        self._dhat = np.where(self.pos, (self.V.T @ self.qtc) / np.where(self.pos, self.lam, 1.0), 0.0)
        resid = self.design @ (self.V @ self._dhat) - self.target
        self._conj_const = 0.5 * float(resid @ resid)

    def prox(self, s, v):
        """(Q^T Q + Id/s)^{-1} (Q^T c + v/s), solved in the eigenbasis."""
        if s <= 0:
            raise ValueError("prox step must be positive")
        w = self.V.T @ (self.qtc + v / s)
        return self.V @ (w / (self.lam + 1.0 / s))

    def range_distance(self, mu):
        """Distance of mu to Ran(Q^T) = Ran(Q^T Q)."""
        mh = self.V.T @ mu
        return float(np.linalg.norm(mh[~self.pos]))

    def range_projection(self, mu):
        mh = np.where(self.pos, self.V.T @ mu, 0.0)
        return self.V @ mh

    def conj_value(self, mu):
        """f*(mu) for mu already known to lie in Ran(Q^T)."""
        mh = np.where(self.pos, self.V.T @ mu, 0.0)
        quad = 0.5 * float(np.sum(np.where(self.pos, mh * mh / np.where(self.pos, self.lam, 1.0), 0.0)))
        return quad + float(mh @ self._dhat) - self._conj_const

    def prox_conj(self, s, w):
        """Prox of s*f* in the eigenbasis (zero outside Ran(Q^T))."""
        wh = self.V.T @ w
        mh = np.where(self.pos, self.lam * (wh - s * self._dhat) / (self.lam + s), 0.0)
        return self.V @ mh

    def max_eig(self):
        return float(self.lam.max())

    def min_pos_eig(self):
        if not np.any(self.pos):
            raise DegenerateProblemError("Q^T Q has no positive eigenvalues")
        return float(self.lam[self.pos].min())


class LeastSquaresObjective(ObjectiveOracle):
    """f(x) = 0.5*||Q x - c||^2 (smooth; conjugate finite on Ran(Q^T) only)."""

    separable_conj = True  # f1* = 0, f2* = f* on its affine domain

    def __init__(self, design, target):
        self.data = LeastSquaresData(design, target)
        self.dim = self.data.n
        self.smooth_lipschitz = self.data.max_eig()
        self.conj_part_lipschitz = 0.0
        try:
            self.conj_grad_lipschitz = 1.0 / self.data.min_pos_eig()
        except DegenerateProblemError:
            self.conj_grad_lipschitz = None

    def __call__(self, x):
        x = _check_dim(x, self.dim, "x")
        r = self.data.design @ x - self.data.target
        return 0.5 * float(r @ r)

    def gradient(self, x):
        return self.data.gram @ x - self.data.qtc

    def prox(self, s, v):
        return self.data.prox(s, _check_dim(v, self.dim, "v"))

    def conj(self, mu, tol=1e-8):
        mu = _check_dim(mu, self.dim, "mu")
        if self.data.range_distance(mu) > tol * np.linalg.norm(mu):
            return INF
        return self.data.conj_value(mu)

    def project_conj_domain(self, mu):
        return self.data.range_projection(_check_dim(mu, self.dim, "mu"))

    def prox_conj(self, s, w):
        return self.data.prox_conj(s, _check_dim(w, self.dim, "w"))

    def stationarity_residual(self, x, g):
        # gradient is a singleton: no inner minimisation needed
        r = self.gradient(x) + g
        return float(r @ r)

    def value_diff(self, x, p):
        # 0.5(||Qx-c||^2 - ||Qp-c||^2) = 0.5 <Q(x-p), (Qx-c) + (Qp-c)>:
        # every factor scales with x - p, so no large-value cancellation
        Q = self.data.design
        rx = Q @ x - self.data.target
        rp = Q @ p - self.data.target
        return 0.5 * float((Q @ (x - p)) @ (rx + rp))


class L1Norm(ObjectiveOracle):
    """f(x) = ||x||_1; prox is soft thresholding, f* the unit-box indicator."""

    conj_lipschitz = 0.0

    def __init__(self, dim):
        self.dim = int(dim)

    def __call__(self, x):
        return float(np.abs(_check_dim(x, self.dim, "x")).sum())

    def prox(self, s, v):
        v = _check_dim(v, self.dim, "v")
        return np.sign(v) * np.maximum(np.abs(v) - s, 0.0)

    def conj(self, mu, tol=1e-8):
        mu = _check_dim(mu, self.dim, "mu")
        return 0.0 if np.abs(mu).max(initial=0.0) <= 1.0 + tol else INF

    def project_conj_domain(self, mu):
        return np.clip(_check_dim(mu, self.dim, "mu"), -1.0, 1.0)

    def prox_conj(self, s, w):
        # prox of the indicator of the unit infinity ball is its projection
        return np.clip(_check_dim(w, self.dim, "w"), -1.0, 1.0)

    def stationarity_residual(self, x, g):
        x = _check_dim(x, self.dim, "x")
        g = _check_dim(g, self.dim, "g")
        on = x != 0.0
        terms = np.where(on, (np.sign(x) + g) ** 2, (np.clip(-g, -1.0, 1.0) + g) ** 2)
        return float(terms.sum())

    def value_diff(self, x, p):
        # exactly-rounded sum of the interleaved +|x_i|, -|p_i| terms
        return math.fsum(np.concatenate([np.abs(x), -np.abs(p)]).tolist())


class NonnegativeQuadratic(ObjectiveOracle):
    """Separable F(x, xt) = 0.5*||Q x - c||^2 + indicator(xt >= 0).

    The primal variable is the 2n-vector X = (x, xt).  All oracle operations
    split into the least-squares block and the nonnegativity block.
    """

    separable_conj = True  # f1* = indicator(mu_t <= 0), f2* = LS conjugate
    conj_part_lipschitz = 0.0

    def __init__(self, design, target):
        self.data = LeastSquaresData(design, target)
        self.block_dim = self.data.n
        self.dim = 2 * self.block_dim
        try:
            self.conj_grad_lipschitz = 1.0 / self.data.min_pos_eig()
        except DegenerateProblemError:
            self.conj_grad_lipschitz = None

    def _split(self, X, what="X"):
        X = _check_dim(X, self.dim, what)
        return X[: self.block_dim], X[self.block_dim:]

    def __call__(self, X):
        x, xt = self._split(X)
        if np.any(xt < 0.0):
            return INF
        r = self.data.design @ x - self.data.target
        return 0.5 * float(r @ r)

    def prox(self, s, V):
        v, vt = self._split(V, "v")
        return np.concatenate([self.data.prox(s, v), np.maximum(vt, 0.0)])

    def conj(self, mu, tol=1e-8):
        m1, m2 = self._split(mu, "mu")
        scale = np.linalg.norm(mu)
        if np.any(m2 > tol * max(scale, 1.0)):
            return INF
        if self.data.range_distance(m1) > tol * max(np.linalg.norm(m1), 1e-300):
            return INF
        return self.data.conj_value(m1)

    def project_conj_domain(self, mu):
        m1, m2 = self._split(mu, "mu")
        return np.concatenate([self.data.range_projection(m1), np.minimum(m2, 0.0)])

    def prox_conj(self, s, w):
        w1, w2 = self._split(w, "w")
        return np.concatenate([self.data.prox_conj(s, w1), np.minimum(w2, 0.0)])

    def stationarity_residual(self, X, J):
        x, xt = self._split(X)
        jl, jb = self._split(J, "J")
        if np.any(xt < 0.0):
            return INF
        smooth = self.data.gram @ x - self.data.qtc + jl
        extra = np.where(xt == 0.0, np.minimum(0.0, jb) ** 2, jb ** 2)
        return float(smooth @ smooth) + float(extra.sum())

    def value_diff(self, X, P):
        _, xt = self._split(X)
        if np.any(xt < 0.0):
            return INF
        x, _ = self._split(X)
        p, _ = self._split(P)  # prox outputs are always feasible
        Q = self.data.design
        rx = Q @ x - self.data.target
        rp = Q @ p - self.data.target
        return 0.5 * float((Q @ (x - p)) @ (rx + rp))
