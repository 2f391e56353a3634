"""Independent verifiers for the main implementations.

The direct-sup smoothed gap here deliberately avoids the closed-form prox
path used by the criteria module: least-squares inner problems go through
conjugate-gradient solves of the stationarity system, and separable
nonsmooth pieces are minimised coordinate-wise by candidate enumeration.
Certificates come from strong convexity of the inner objective.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .criteria import SmoothingParams, smoothed_duality_gap
from .errors import ConvergenceError, StopgapError
from .linalg import orthonormal_basis
from .objectives import L1Norm, LeastSquaresObjective, NonnegativeQuadratic
from .pdhg import SolveConfig, default_step_sizes, solve
from .problem import PrimalDualPoint

INF = float("inf")


# ---------------------------------------------------------------------------
# inner minimisers for the direct-sup smoothed gap


def _min_quad_cg(gram, lin, shift, center, bx, tol):
    """min over u of 0.5 u^T gram u - <lin, u> + <shift, u> + bx/2 ||u - center||^2.

    Solved as (gram + bx I) u = lin - shift + bx*center by CG; certified via
    the strong-convexity bound value_gap <= ||grad||^2 / (2 bx).
    """
    n = center.shape[0]
    rhs = lin - shift + bx * center

    def mv(u):
        return gram @ u + bx * u

    op = LinearOperator((n, n), matvec=mv)
    u, _ = cg(op, rhs, rtol=1e-14, atol=0.0, maxiter=20 * n + 200)
    grad = mv(u) - rhs
    cert = float(grad @ grad) / (2.0 * bx)
    if cert > tol:
        raise ConvergenceError(f"inner CG certificate {cert:.3e} above tolerance {tol:.3e}")
    return u


def _quad_value(Q, c, u, shift, center, bx):
    r = Q @ u - c
    return (0.5 * float(r @ r) + float(shift @ u)
            + 0.5 * bx * float((u - center) @ (u - center)))


def _min_abs_coord(g, center, bx):
    """Coordinate-wise min of |u| + g u + bx/2 (u - center)^2 by enumerating
    the stationary points of both linear branches plus the kink."""
    u_pos = center - (g + 1.0) / bx
    u_neg = center - (g - 1.0) / bx
    out = np.zeros_like(center)
    best = 0.5 * bx * center * center  # value at the kink u = 0
    for cand in (np.where(u_pos > 0, u_pos, 0.0), np.where(u_neg < 0, u_neg, 0.0)):
        val = np.abs(cand) + g * cand + 0.5 * bx * (cand - center) ** 2
        take = val < best
        out = np.where(take, cand, out)
        best = np.where(take, val, best)
    return out, float(best.sum())


def _min_nonneg_coord(g, center, bx):
    """Coordinate-wise min over u >= 0 of g u + bx/2 (u - center)^2."""
    u = np.maximum(center - g / bx, 0.0)
    val = g * u + 0.5 * bx * (u - center) ** 2
    return u, float(val.sum())


def _inner_min(problem, dual, center, bx, tol):
    """min over x' of f(x') + <x', A^T dual> + bx/2 ||x' - center||^2."""
    obj = problem.objective
    shift = problem.constraint.matrix.T @ dual
    if isinstance(obj, LeastSquaresObjective):
        Q, c = obj.data.design, obj.data.target
        u = _min_quad_cg(obj.data.gram, obj.data.qtc, shift, center, bx, tol)
        return _quad_value(Q, c, u, shift, center, bx)
    if isinstance(obj, L1Norm):
        _, val = _min_abs_coord(shift, center, bx)
        return val
    if isinstance(obj, NonnegativeQuadratic):
        nb = obj.block_dim
        u1 = _min_quad_cg(obj.data.gram, obj.data.qtc, shift[:nb], center[:nb], bx, tol)
        v1 = _quad_value(obj.data.design, obj.data.target, u1, shift[:nb], center[:nb], bx)
        _, v2 = _min_nonneg_coord(shift[nb:], center[nb:], bx)
        return v1 + v2
    raise StopgapError(f"no independent inner solver for {type(obj).__name__}")


def sdg_general_direct(problem, u, v, x_dot, y_dot, beta: SmoothingParams,
                       inner_tol=1e-10):
    """Direct-sup smoothed gap G_beta((u, v); (x_dot, y_dot)).

    The dual maximisation is closed form; the primal minimisation goes
    through the independent inner solvers above.
    """
    A = problem.constraint.matrix
    fu = problem.objective(u)
    if not math.isfinite(fu):
        return INF
    ru = A @ u - problem.constraint.rhs
    val = fu + float(ru @ y_dot) + float(ru @ ru) / (2.0 * beta.beta_y)
    val += float(problem.constraint.rhs @ v)
    val -= _inner_min(problem, v, x_dot, beta.beta_x, inner_tol)
    return val


def sdg_direct(problem, z: PrimalDualPoint, beta: SmoothingParams, inner_tol=1e-10):
    """Self-centered direct-sup smoothed gap (cross-check of the closed form)."""
    problem.check_point(z)
    return sdg_general_direct(problem, z.x, z.y, z.x, z.y, beta, inner_tol)


def sdg_decomposition_gap(problem, z, z_star, beta, inner_tol=1e-10):
    """Residual of the saddle decomposition
    G(z) - G(x, y*; x*, y) - G(x*, y; x, y*), all by direct sup."""
    xs, ys = z_star
    total = sdg_direct(problem, z, beta, inner_tol)
    inner = sdg_general_direct(problem, z.x, ys, xs, z.y, beta, inner_tol)
    outer = sdg_general_direct(problem, xs, z.y, z.x, ys, beta, inner_tol)
    return total - (inner + outer), (total, inner, outer)


# ---------------------------------------------------------------------------
# brute-force prox oracle


def prox_oracle_1d(f_scalar, s, v, grid_points=401, rounds=12, expand_limit=60):
    """Certified 1-D prox by dense grid search with interval refinement.

    Minimises f(u) + (u - v)^2 / (2 s).  The bracket expands until the best
    grid point is interior, then zooms; the final resolution is the returned
    interval width divided by the grid size.
    """
    def h(u):
        return f_scalar(u) + (u - v) ** 2 / (2.0 * s)

    radius = abs(v) + s + 1.0
    lo, hi = v - radius, v + radius
    for _ in range(expand_limit):
        us = np.linspace(lo, hi, grid_points)
        vals = np.array([h(u) for u in us])
        i = int(np.nanargmin(vals))
        if 0 < i < grid_points - 1:
            break
        lo, hi = v - 2 * (v - lo), v + 2 * (hi - v)
    else:
        raise ConvergenceError("could not bracket the 1-D prox minimiser")
    # value-based search cannot localise beyond the curvature floor where
    # h differences fall under machine epsilon
    floor = math.sqrt(2.0 * s * np.finfo(float).eps * max(1.0, abs(vals[i])))
    for _ in range(rounds):
        if us[1] - us[0] <= floor:
            break
        lo, hi = us[max(i - 1, 0)], us[min(i + 1, grid_points - 1)]
        us = np.linspace(lo, hi, grid_points)
        vals = np.array([h(u) for u in us])
        i = int(np.nanargmin(vals))
    return float(us[i]), max(float(us[1] - us[0]), floor)


def prox_oracle_pg(f_grad, project, s, v, lipschitz, tol=1e-10, max_iters=200_000):
    """Certified prox of a smooth (optionally constrained) objective by
    projected gradient on h(u) = f(u) + ||u - v||^2/(2s).

    Stops when the fixed-point residual ||u - proj(u - step grad h(u))|| / step
    drops below tol; exhausting the budget raises ConvergenceError.
    """
    v = np.asarray(v, dtype=float)
    step = 1.0 / (lipschitz + 1.0 / s)
    u = project(v.copy())
    for _ in range(max_iters):
        grad = f_grad(u) + (u - v) / s
        u_next = project(u - step * grad)
        res = np.linalg.norm(u - u_next) / step
        u = u_next
        if res <= tol:
            return u
    raise ConvergenceError(f"projected gradient residual {res:.3e} above {tol:.3e}")


# ---------------------------------------------------------------------------
# smoothed-gap witness vectors


@dataclass
class GapWitness:
    p: np.ndarray        # prox_{f/beta_x}(x - A^T y / beta_x)
    p_star: np.ndarray   # prox_{beta_x f*}(beta_x x - A^T y) + A^T y  (= beta_x (x-p))
    a_tilde: np.ndarray  # -A^T y + beta_x (x - p), a subgradient at p
    a: np.ndarray        # projection of -A^T y onto dom f*
    checks: dict         # name -> signed slack (>= 0 means pass)


def gap_witness(problem, z: PrimalDualPoint, beta: SmoothingParams, tol=1e-9):
    """Witness vectors and their identities/inequalities at (z, beta).

    Checks (slack convention: value >= 0 passes; tolerances are folded in):
      moreau             ||p + p*/beta_x - x|| ~ 0
      proj_norm_monotone ||a + A^T y|| <= ||a~ + A^T y||
      atilde_norm        ||a~ + A^T y|| = ||p*||
      a_minus_atilde     ||a - a~|| <= ||p*||
      pstar_floor        ||p*||^2 <= 2 beta_x G
      fenchel_young      f(p) + f*(a~) = <p, a~>
      proj_inner         <-A^T y - a, a~ - a> <= 0
    """
    obj = problem.objective
    sdg = smoothed_duality_gap(problem, z, beta)
    aty = problem.constraint.matrix.T @ z.y
    bx = beta.beta_x
    p = sdg.witnesses["p"]
    # Moreau gives prox_{bx f*}(bx x - A^T y) = bx (x - p) - A^T y; adding
    # A^T y back yields the quantity the norm chain and the gap floor use,
    # while keeping p_star on the independent conjugate-prox code path
    p_star = obj.prox_conj(bx, bx * z.x - aty) + aty
    a_tilde = -aty + bx * (z.x - p)
    a = obj.project_conj_domain(-aty)

    scale = max(1.0, float(np.linalg.norm(z.x)), float(np.linalg.norm(aty)))
    na = float(np.linalg.norm(a + aty))
    nat = float(np.linalg.norm(a_tilde + aty))
    nps = float(np.linalg.norm(p_star))
    fp = obj(p)
    fconj = obj.conj(a_tilde)
    inner = float(p @ a_tilde)
    # the pairing <p, a~> cancels from the ||p||*||a~|| scale down to O(f);
    # achievable equality precision is relative to the former
    fy_scale = max(1.0, abs(fp), abs(fconj),
                   float(np.linalg.norm(p)) * float(np.linalg.norm(a_tilde)))
    checks = {
        "moreau": tol * scale - float(np.linalg.norm(p + p_star / bx - z.x)),
        "proj_norm_monotone": nat - na + tol * scale,
        "atilde_norm": tol * scale - abs(nat - nps),
        "a_minus_atilde": nps - float(np.linalg.norm(a - a_tilde)) + tol * scale,
        "pstar_floor": 2.0 * bx * sdg.value - nps ** 2 + tol * max(1.0, nps ** 2),
        "fenchel_young": tol * fy_scale - abs(fp + fconj - inner),
        "proj_inner": -float((-aty - a) @ (a_tilde - a)) + tol * scale,
    }
    return GapWitness(p=p, p_star=p_star, a_tilde=a_tilde, a=a, checks=checks)


# ---------------------------------------------------------------------------
# regression counterexamples separating the criteria


def counterexample_kkt_vs_og(epsilon_list):
    """Huberised |x|-like family: f(x) = x for x > eps, x^2/(2 eps) + eps/2
    otherwise.  The derivative at x = eps is exactly 1 for every eps while
    the value gap f(eps) - f(0) = eps/2 vanishes."""
    rows = []
    for eps in epsilon_list:
        if eps <= 0:
            raise StopgapError("epsilon entries must be positive")

        def f(x, e=eps):
            return x if x > e else x * x / (2.0 * e) + e / 2.0

        deriv = 1.0                  # both branches give f'(eps) = 1 exactly
        gap = f(eps) - f(0.0)
        h = 1e-6 * max(eps, 1e-3)
        fd = (f(eps + 2 * h) - f(eps + h)) / h   # one-sided, inside the linear branch
        rows.append({"epsilon": eps, "derivative": deriv, "gap": gap,
                     "gap_expected": eps / 2.0, "fd_derivative": fd,
                     "separated": deriv == 1.0 and gap <= eps})
    return {"name": "kkt_vs_og", "rows": rows,
            "passed": all(r["separated"] and abs(r["gap"] - r["gap_expected"]) < 1e-15
                          and abs(r["fd_derivative"] - 1.0) < 1e-5 for r in rows)}


def counterexample_kkt_vs_sdg(x_list):
    """Unconstrained |x| at beta = (1, 1): the KKT error stays 1 while the
    smoothed gap |x| - [|x|-1]_+ - ([|x|-1]_+ sgn(x) - x)^2 / 2 vanishes."""
    rows = []
    for x in x_list:
        if x == 0.0:
            raise StopgapError("x entries must be nonzero")
        shrink = max(abs(x) - 1.0, 0.0) * math.copysign(1.0, x)
        g = abs(x) - abs(shrink) - 0.5 * (shrink - x) ** 2
        kkt = 1.0  # subdifferential of |.| at x != 0 is the singleton {sgn(x)}
        small_x_formula = abs(x) - 0.5 * x * x if abs(x) <= 1.0 else None
        rows.append({"x": x, "sdg": g, "kkt": kkt, "sdg_small_x": small_x_formula})
    return {"name": "kkt_vs_sdg", "rows": rows,
            "passed": all(r["kkt"] == 1.0
                          and (r["sdg_small_x"] is None
                               or abs(r["sdg"] - r["sdg_small_x"]) < 1e-15)
                          for r in rows)}


# ---------------------------------------------------------------------------
# PDHG stability probe on basis pursuit


def pdhg_instability_probe(bp_instance, budget=100_000, epsilon=1e-8):
    """Runs both PDHG orderings on a basis-pursuit instance with the KKT and
    SDG gates and reports the stability separation: the version-1 KKT gate
    must not fire within the budget while version-2 KKT and both SDG gates
    must; version-2 primal iterates carry exact zeros, version-1 only
    near-zeros."""
    if budget < 10_000:
        raise StopgapError("probe budget must be at least 10^4 iterations")
    steps = default_step_sizes(bp_instance.constraint)
    out = {}
    for version in (1, 2):
        cfg = SolveConfig(epsilon=epsilon, max_iters=budget, criterion="all",
                          evaluate=("kkt", "sdg"), version=version, record_every=budget)
        traj = solve(bp_instance, cfg, steps)
        x = traj.final_point.x
        out[f"v{version}"] = {
            "kkt_stop": traj.crossings["kkt"],
            "sdg_stop": traj.crossings["sdg"],
            "exact_zeros": int(np.count_nonzero(x == 0.0)),
            "tiny_nonzeros": int(np.count_nonzero((np.abs(x) < 1e-6) & (x != 0.0))),
        }
    v1, v2 = out["v1"], out["v2"]
    out["separated"] = (v1["kkt_stop"] is None
                        and v2["kkt_stop"] is not None
                        and v1["sdg_stop"] is not None
                        and v2["sdg_stop"] is not None
                        and v2["exact_zeros"] > 0
                        and v1["tiny_nonzeros"] > 0)
    return out


# ---------------------------------------------------------------------------
# bundled verification suite (machine-readable, consumed by CI)


def _random_point(problem, rng, scale=2.0):
    return PrimalDualPoint(scale * rng.standard_normal(problem.constraint.n),
                           scale * rng.standard_normal(problem.constraint.m))


def _feasible_random_point(problem, rng, scale=2.0):
    """Random point with the primal pulled into dom f via one prox."""
    z = _random_point(problem, rng, scale)
    x = problem.objective.prox(1.0, z.x)
    return PrimalDualPoint(x, z.y)


def verification_suite(problem, seed=0, sdg_samples=100, witness_samples=200,
                       inner_tol=1e-8, beta_range=(1e-2, 1e2)):
    """Cross-checks of the closed-form machinery against the independent
    oracles on one instance; returns a JSON-ready summary."""
    rng = np.random.default_rng(seed)
    lo, hi = np.log(beta_range[0]), np.log(beta_range[1])
    report = {"instance": problem.label, "seed": seed}

    max_err = 0.0
    for _ in range(sdg_samples):
        z = _feasible_random_point(problem, rng)
        b = float(np.exp(rng.uniform(lo, hi)))
        beta = SmoothingParams(b, b)
        closed = smoothed_duality_gap(problem, z, beta).value
        direct = sdg_direct(problem, z, beta, inner_tol)
        max_err = max(max_err, abs(closed - direct))
    report["sdg_direct_max_abs_err"] = max_err
    report["sdg_direct_pass"] = max_err <= max(1e-6, 10.0 * inner_tol)

    worst = {}
    for _ in range(witness_samples):
        z = _random_point(problem, rng)
        b = float(np.exp(rng.uniform(lo, hi)))
        w = gap_witness(problem, z, SmoothingParams(b, b))
        for name, slack in w.checks.items():
            worst[name] = min(worst.get(name, INF), slack)
    report["witness_min_slack"] = worst
    report["witness_pass"] = all(v >= 0.0 for v in worst.values())

    if problem.reference is not None:
        xs = problem.reference.x_star
        # dual part of a saddle from the stationarity system when available
        ys = problem.extras.get("y_star")
        if ys is None and hasattr(problem.objective, "gradient"):
            ys, *_ = np.linalg.lstsq(problem.constraint.matrix.T,
                                     -problem.objective.gradient(xs), rcond=None)
        if ys is not None:
            decomp_err = 0.0
            lemma10_worst = INF
            init_bound_worst = INF
            for _ in range(10):
                z = _feasible_random_point(problem, rng, scale=1.0)
                b = float(np.exp(rng.uniform(np.log(1e-1), np.log(10.0))))
                beta = SmoothingParams(b, b)
                gap, parts = sdg_decomposition_gap(problem, z, (xs, ys), beta, inner_tol)
                decomp_err = max(decomp_err, abs(gap))
                total, _, outer = parts
                floor = -2.0 * math.sqrt(beta.beta_x * max(total, 0.0)) \
                    * float(np.linalg.norm(z.x - xs))
                lemma10_worst = min(lemma10_worst, outer - floor)
                # oracle-mode initial bound: f(x) - f* <= ||q|| ||x - x*|| + ||y|| ||Ax-b||
                fx = problem.objective(z.x)
                if math.isfinite(fx):
                    q = math.sqrt(problem.objective.stationarity_residual(
                        z.x, problem.constraint.matrix.T @ z.y))
                    rhs = (q * float(np.linalg.norm(z.x - xs))
                           + float(np.linalg.norm(z.y))
                           * float(np.linalg.norm(problem.constraint.residual(z.x))))
                    init_bound_worst = min(init_bound_worst,
                                           rhs - (fx - problem.reference.f_star) + 1e-9)
            report["decomposition_max_abs_err"] = decomp_err
            report["decomposition_pass"] = decomp_err <= max(1e-6, 10.0 * inner_tol)
            report["lemma10_min_slack"] = lemma10_worst + 1e-6
            report["lemma10_pass"] = report["lemma10_min_slack"] >= 0.0
            report["initial_bound_min_slack"] = init_bound_worst
            report["initial_bound_pass"] = init_bound_worst >= 0.0

    report["passed"] = all(v for k, v in report.items() if k.endswith("_pass"))
    return report


# ---------------------------------------------------------------------------
# affine-domain chart checks


def diffeomorphism_checks(offset, span, rng, samples=50, tol=1e-10, warn=None):
    """Orthonormal chart of the affine set offset + span and its two
    identities: the chart preserves norms of differences and its inverse's
    Jacobian maps coordinate differences back to point differences."""
    offset = np.asarray(offset, dtype=float)
    basis = orthonormal_basis(span, warn=warn)
    k = basis.shape[1]
    ortho_err = float(np.abs(basis.T @ basis - np.eye(k)).max()) if k else 0.0
    max_norm_err = 0.0
    max_jac_err = 0.0
    for _ in range(samples):
        lam1 = rng.standard_normal(k)
        lam2 = rng.standard_normal(k)
        x1 = offset + basis @ lam1
        x2 = offset + basis @ lam2
        phi1 = basis.T @ (x1 - offset)
        phi2 = basis.T @ (x2 - offset)
        max_norm_err = max(max_norm_err,
                           abs(np.linalg.norm(phi1 - phi2) - np.linalg.norm(x1 - x2)))
        # the Jacobian of the inverse chart is the basis matrix itself
        max_jac_err = max(max_jac_err,
                          float(np.linalg.norm(basis @ (phi1 - phi2) - (x1 - x2))))
    return {"dimension": k, "orthonormality_error": ortho_err,
            "norm_preservation_error": max_norm_err, "jacobian_error": max_jac_err,
            "passed": max(ortho_err, max_norm_err, max_jac_err) <= tol}
