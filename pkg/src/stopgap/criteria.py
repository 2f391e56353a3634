"""The four optimality measures evaluated at a primal-dual point, plus the
smoothing-parameter grid and its selection rules.

Conventions: KKT and PDG are sums of squared residuals; OG/FE are plain
values; the smoothed gap is evaluated per smoothing pair beta = (beta_x,
beta_y) and is provably >= 0 for the self-centered version.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, StopgapError
from .problem import PrimalDualPoint, ProblemInstance

INF = float("inf")

# grid of 40 log-equispaced smoothing values spanning [1e-8, 100]
GRID_VALUES = tuple(np.logspace(-8.0, 2.0, 40).tolist())


@dataclass(frozen=True)
class SmoothingParams:
    """beta = (beta_x, beta_y), both strictly positive and finite."""

    beta_x: float
    beta_y: float

    def __post_init__(self):
        if not (0.0 < self.beta_x < INF and 0.0 < self.beta_y < INF):
            raise ConfigError(f"smoothing parameters must be in (0, inf): {self}")


@dataclass(frozen=True)
class BetaGrid:
    """40 fixed log-spaced values plus the current feasibility error."""

    values: tuple

    @classmethod
    def build(cls, feasibility_error=0.0):
        vals = list(GRID_VALUES)
        if feasibility_error > 0.0:
            vals.append(float(feasibility_error))
        return cls(values=tuple(sorted(vals)))

    def __iter__(self):
        return iter(self.values)

    def smallest(self):
        return self.values[0]


@dataclass
class CriterionValue:
    """Tagged scalar output of one optimality measure.

    ``witnesses`` carries the PDG projection point ``a`` or the SDG proximal
    point ``p`` when applicable; ``beta_used`` records the smoothing pair.
    """

    kind: str                       # OG | FE | KKT | PDG | SDG
    value: float
    witnesses: dict = field(default_factory=dict)
    beta_used: SmoothingParams | None = None

    def __post_init__(self):
        if self.kind not in ("OG", "FE", "KKT", "PDG", "SDG"):
            raise ConfigError(f"unknown criterion kind {self.kind!r}")
        if not (self.value >= 0.0 or self.value == INF):
            raise StopgapError(f"criterion {self.kind} evaluated to {self.value}")

    @property
    def finite(self):
        return math.isfinite(self.value)


def ogfe(problem: ProblemInstance, z: PrimalDualPoint):
    """Optimality gap max(f(x) - f*, 0) and feasibility error ||Ax - b||.

    Requires a reference solution; OG is an oracle-only quantity.
    """
    problem.check_point(z)
    if problem.reference is None:
        raise ConfigError(f"problem {problem.label!r} has no reference solution; "
                          "the optimality gap is not computable")
    fx = problem.objective(z.x)
    og = max(fx - problem.reference.f_star, 0.0)
    fe = float(np.linalg.norm(problem.constraint.residual(z.x)))
    return (CriterionValue("OG", og), CriterionValue("FE", fe))


def feasibility_error(problem: ProblemInstance, z: PrimalDualPoint):
    problem.check_point(z)
    return CriterionValue("FE", float(np.linalg.norm(problem.constraint.residual(z.x))))


def kkt_error(problem: ProblemInstance, z: PrimalDualPoint):
    """||df(x) + A^T y||_0^2 + ||Ax - b||^2 (squared minimum-norm subgradient
    plus squared feasibility error); +inf propagates from the residual."""
    problem.check_point(z)
    g = problem.constraint.matrix.T @ z.y
    stat = problem.objective.stationarity_residual(z.x, g)
    r = problem.constraint.residual(z.x)
    return CriterionValue("KKT", stat + float(r @ r))


def projected_duality_gap(problem: ProblemInstance, z: PrimalDualPoint):
    """|f(x) + f*(a) + <b,y>|^2 + ||a + A^T y||^2 + ||Ax - b||^2 with
    a = Proj_{dom f*}(-A^T y)."""
    problem.check_point(z)
    obj = problem.objective
    aty = problem.constraint.matrix.T @ z.y
    a = obj.project_conj_domain(-aty)
    fa = obj.conj(a)
    if not math.isfinite(fa):
        raise StopgapError("projection onto dom f* returned a point with f* = +inf "
                           "(projection contract violated)")
    fx = obj(z.x)
    r = problem.constraint.residual(z.x)
    da = a + aty
    if not math.isfinite(fx):
        value = INF
    else:
        gap = fx + fa + float(problem.constraint.rhs @ z.y)
        value = gap * gap + float(da @ da) + float(r @ r)
    return CriterionValue("PDG", value, witnesses={"a": a})


def smoothed_duality_gap(problem: ProblemInstance, z: PrimalDualPoint,
                         beta: SmoothingParams):
    """Self-centered smoothed gap in closed form.

    G_beta(z) = f(x) - f(p) + <A(x-p), y> - beta_x/2 ||p-x||^2
                + ||Ax-b||^2 / (2 beta_y)
    with p = prox_{f/beta_x}(x - A^T y / beta_x).  Nonnegative up to
    round-off; tiny negatives are clamped to zero.
    """
    problem.check_point(z)
    obj = problem.objective
    A = problem.constraint.matrix
    aty = A.T @ z.y
    p = obj.prox(1.0 / beta.beta_x, z.x - aty / beta.beta_x)
    if not np.all(np.isfinite(p)):
        raise StopgapError("prox returned a non-finite point")
    fx = obj(z.x)
    r = problem.constraint.residual(z.x)
    fe2 = float(r @ r)
    if not math.isfinite(fx):
        return CriterionValue("SDG", INF, witnesses={"p": p}, beta_used=beta)
    d = z.x - p
    # f(x) - f(p) through the cancellation-free path: near convergence the
    # difference sits many orders below f itself
    value = (obj.value_diff(z.x, p) + float((A @ d) @ z.y)
             - 0.5 * beta.beta_x * float(d @ d) + fe2 / (2.0 * beta.beta_y))
    scale = max(1.0, abs(fx), fe2)
    if value < 0.0:
        if value < -1e-9 * scale:
            raise StopgapError(f"self-centered smoothed gap is negative ({value}) "
                               "beyond round-off; prox is inconsistent")
        value = 0.0
    return CriterionValue("SDG", value, witnesses={"p": p}, beta_used=beta)


def sdg_over_grid(problem, z, grid: BetaGrid):
    """Smoothed gap at every grid entry with beta_x = beta_y."""
    out = []
    for b in grid:
        beta = SmoothingParams(b, b)
        out.append(smoothed_duality_gap(problem, z, beta))
    return out


def epsilon_solution_surrogate(value: CriterionValue):
    """max(G_beta, sqrt(2 beta_y G_beta)): small iff the gap certifies an
    epsilon-solution at this beta (feasibility via the corollary bound)."""
    g = value.value
    if not math.isfinite(g):
        return INF
    return max(g, math.sqrt(2.0 * value.beta_used.beta_y * g))


def select_beta(grid: BetaGrid, candidates, mode="one-sided"):
    """Pick the smoothing pair from per-beta (beta, lhs, rhs) candidates.

    mode 'one-sided' minimises rhs; mode 'ratio' minimises rhs/lhs.  +inf
    candidates are dropped first; ties break toward smaller beta.  When no
    candidate survives (all +inf, or no positive lhs in ratio mode) the
    smallest grid value is returned with selected=False.
    """
    if mode not in ("one-sided", "ratio"):
        raise ConfigError(f"unknown selection mode {mode!r}")
    if not candidates:
        raise ConfigError("select_beta needs at least one candidate")
    best_key = INF
    best = None
    for beta, lhs, rhs in candidates:
        if not math.isfinite(rhs):
            continue
        if mode == "ratio":
            if not (math.isfinite(lhs) and lhs > 0.0):
                continue
            key = rhs / lhs
        else:
            key = rhs
        pair = beta if isinstance(beta, SmoothingParams) else SmoothingParams(float(beta), float(beta))
        if key < best_key or (key == best_key and best is not None and pair.beta_x < best.beta_x):
            best_key = key
            best = pair
    if best is None:
        b = grid.smallest()
        return SmoothingParams(b, b), False
    return best, True
