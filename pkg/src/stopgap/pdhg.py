"""Primal-Dual Hybrid Gradient, both orderings, with pluggable stopping
criteria and full trajectory recording.

Version 1 proxes the primal first and extrapolates it afterwards; version 2
takes the dual ascent first so the returned primal is a prox output (exact
zeros/projections survive, which matters for the nonsmooth problems).
"""

from dataclasses import dataclass, field

import numpy as np

from . import criteria
from .criteria import BetaGrid, epsilon_solution_surrogate
from .errors import ConfigError, DegenerateProblemError, StopgapError
from .problem import PrimalDualPoint

INF = float("inf")

CRITERIA = ("ogfe", "kkt", "pdg", "sdg")


@dataclass(frozen=True)
class StepSizes:
    """tau (primal) and sigma (dual); convergence needs tau*sigma*||A||^2 < 1."""

    tau: float
    sigma: float

    def __post_init__(self):
        if self.tau <= 0 or self.sigma <= 0:
            raise ConfigError("step sizes must be positive")

    def check(self, op_norm):
        if self.tau * self.sigma * op_norm ** 2 >= 1.0:
            raise ConfigError(
                f"tau*sigma*||A||^2 = {self.tau * self.sigma * op_norm ** 2} >= 1")


def default_step_sizes(constraint):
    """tau = 0.95/||A||, sigma = 1/||A|| so that tau*sigma*||A||^2 = 0.95."""
    nrm = constraint.norm()
    if nrm <= 0:
        raise DegenerateProblemError("operator norm must be positive")
    return StepSizes(tau=0.95 / nrm, sigma=1.0 / nrm)


@dataclass
class SolveConfig:
    """Stopping target and bookkeeping for one solve."""

    epsilon: float = 1e-8
    max_iters: int = 100_000
    criterion: str = "sdg"          # which gate stops the run
    record_every: int = 1
    seed: int = 0
    version: int = 1                # PDHG step ordering
    sdg_gate: str = "surrogate"     # surrogate: max(G, sqrt(2 by G)) <= eps
                                    # raw:       G <= eps^2
    evaluate: tuple = ()            # extra criteria recorded along the way
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.criterion not in CRITERIA + ("all",):
            raise ConfigError(f"unknown stopping criterion {self.criterion!r}")
        if self.criterion == "all" and not self.evaluate:
            raise ConfigError("criterion 'all' needs a non-empty evaluate list")
        if self.version not in (1, 2):
            raise ConfigError("version must be 1 or 2")
        if self.sdg_gate not in ("surrogate", "raw"):
            raise ConfigError(f"unknown sdg gate {self.sdg_gate!r}")
        unknown = set(self.evaluate) - set(CRITERIA)
        if unknown:
            raise ConfigError(f"unknown criteria to evaluate: {sorted(unknown)}")


@dataclass
class Trajectory:
    """Recorded iterates plus where and why the run stopped.

    ``crossings`` maps each evaluated criterion to the first iteration at
    which its gate fired (None if it never did).
    """

    iterates: list = field(default_factory=list)  # (k, PrimalDualPoint, {name: CriterionValue})
    stop_reason: str = "budget_exhausted"
    iterations_used: int = 0
    crossings: dict = field(default_factory=dict)

    @property
    def final_point(self):
        return self.iterates[-1][1]


def step_v1(problem, z, steps: StepSizes):
    """Prox step, dual ascent, primal extrapolation (dual kept)."""
    problem.check_point(z)
    A = problem.constraint.matrix
    xb = problem.objective.prox(steps.tau, z.x - steps.tau * (A.T @ z.y))
    yb = z.y + steps.sigma * (A @ xb - problem.constraint.rhs)
    xp = xb - steps.tau * (A.T @ (yb - z.y))
    _ensure_finite(xp, yb)
    return PrimalDualPoint(xp, yb)


def step_v2(problem, z, steps: StepSizes):
    """Dual ascent first; the returned primal is the prox output itself."""
    problem.check_point(z)
    A = problem.constraint.matrix
    yb = z.y + steps.sigma * (A @ z.x - problem.constraint.rhs)
    xb = problem.objective.prox(steps.tau, z.x - steps.tau * (A.T @ yb))
    yp = yb + steps.sigma * (A @ (xb - z.x))
    _ensure_finite(xb, yp)
    return PrimalDualPoint(xb, yp)


def _ensure_finite(x, y):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise StopgapError("PDHG produced a non-finite iterate")


def _gate_value(problem, z, name, config):
    """Value and threshold for one stopping gate, plus the evaluations made."""
    if name == "ogfe":
        og, fe = criteria.ogfe(problem, z)
        return max(og.value, fe.value), config.epsilon, {"og": og, "fe": fe}
    if name == "kkt":
        k = criteria.kkt_error(problem, z)
        return k.value, config.epsilon ** 2, {"kkt": k}
    if name == "pdg":
        d = criteria.projected_duality_gap(problem, z)
        return d.value, config.epsilon ** 2, {"pdg": d}
    # sdg: best certificate over the per-iteration grid
    fe = float(np.linalg.norm(problem.constraint.residual(z.x)))
    grid = BetaGrid.build(fe)
    best_val = INF
    best_cv = None
    for cv in criteria.sdg_over_grid(problem, z, grid):
        val = cv.value if config.sdg_gate == "raw" else epsilon_solution_surrogate(cv)
        if val < best_val or best_cv is None:
            best_val = val
            best_cv = cv
    thr = config.epsilon ** 2 if config.sdg_gate == "raw" else config.epsilon
    return best_val, thr, {"sdg": best_cv}


def solve(problem, config: SolveConfig, steps: StepSizes | None = None):
    """Iterate PDHG from z0 until the configured gate fires or the budget
    runs out.  All criteria listed in ``config.evaluate`` (plus the gating
    one) are computed every iteration; their first crossings are recorded.
    """
    if problem.constraint.m < 1:
        raise ConfigError("the solver requires at least one constraint row")
    if steps is None:
        steps = default_step_sizes(problem.constraint)
    steps.check(problem.constraint.norm())

    gate_all = config.criterion == "all"
    gating = tuple(config.evaluate) if gate_all else (config.criterion,)
    names = list(dict.fromkeys(gating + tuple(config.evaluate)))
    if "ogfe" in names and problem.reference is None:
        raise ConfigError("ogfe gate needs a reference solution")

    x0 = np.zeros(problem.constraint.n) if config.x0 is None else np.asarray(config.x0, float)
    y0 = np.zeros(problem.constraint.m) if config.y0 is None else np.asarray(config.y0, float)
    z = problem.check_point(PrimalDualPoint(x0, y0))
    stepper = step_v1 if config.version == 1 else step_v2

    traj = Trajectory(crossings={n: None for n in names})

    def evaluate(k, zk):
        values = {}
        for name in names:
            if traj.crossings[name] is not None:
                continue  # first crossing already recorded; skip the recompute
            val, thr, evs = _gate_value(problem, zk, name, config)
            values.update(evs)
            if val <= thr:
                traj.crossings[name] = k
        if gate_all:
            fired = all(traj.crossings[n] is not None for n in gating)
        else:
            fired = traj.crossings[config.criterion] == k
        return fired, values

    fired, values = evaluate(0, z)
    traj.iterates.append((0, z, values))
    if fired:
        traj.stop_reason = "converged"
        return traj

    for k in range(1, config.max_iters + 1):
        z = stepper(problem, z, steps)
        fired, values = evaluate(k, z)
        if fired or k == config.max_iters or k % config.record_every == 0:
            traj.iterates.append((k, z, values))
        traj.iterations_used = k
        if fired:
            traj.stop_reason = "converged"
            return traj
    traj.stop_reason = "budget_exhausted"
    return traj
