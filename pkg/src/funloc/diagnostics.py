"""Exact error decomposition and bound audits for oracle targets.

For targets with closed-form derivatives the estimation error splits exactly
into a ridge bias, a projection bias, a Taylor bias and a noise term; the
split is an algebraic identity of the assembled system and so doubles as a
strong correctness check of the whole pipeline.  The Monte Carlo routines
here probe the moment and variance bounds that drive the convergence theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .basis import FunctionVec, project_head, subtract
from .estimator import EstimatorConfig, LocalDesign, assemble, solve_sym
from .multiindex import monomial_matrix
from .simulate import (
    GaussianCovariateModel,
    RegressionTarget,
    c2_star,
    rng_stream,
    sample_coefficients,
)

__all__ = [
    "DecompositionReport",
    "BoundsReport",
    "SingularMomentError",
    "taylor_remainder",
    "projection_remainder",
    "projection_bound_constant",
    "decompose_error",
    "inverse_moment_monte_carlo",
    "variance_proxy_check",
    "sample_conditioned",
    "remainder_bound_audit",
    "conditioned_second_moment_check",
    "tail_second_moment_check",
    "taylor_weight_check",
]

MC_ABS_SLACK = 1e-10  # bound checks fail only beyond 3 standard errors plus this


class SingularMomentError(RuntimeError):
    """Conditioned moment matrix stayed singular after sample-size escalation."""


@dataclass
class DecompositionReport:
    """Exact split of g_hat - g(x) into its four sources."""

    ridge_bias: float        # from the regularizer acting on the Taylor coefficients
    projection_bias: float   # from truncating X - x to its first J coordinates
    taylor_bias: float       # from truncating the Taylor expansion at degree K-1
    noise_term: float        # from the response noise
    g_hat: float
    g_at_site: float
    identity_residual: float
    remainder_bound_violations: int
    inputs_trace: dict


@dataclass
class BoundsReport:
    """Monte Carlo estimates against the theoretical ceilings."""

    inv_moment_hat: float        # leading entry of the inverse conditioned moment matrix
    inv_moment_bound: float
    inv_moment_pass: bool
    variance_proxy: float        # leading entry of (M + S)^{-1} for the pooled design
    smallball_hat: float
    c1: float
    c2: float
    c2_star: float
    draws_used: int
    projection_bound_constant: float | None = None


def taylor_remainder(target: RegressionTarget, x: FunctionVec, X: FunctionVec,
                     K: int) -> float:
    """Remainder of the degree-(K-1) Taylor expansion of the target at x."""
    return target.taylor_remainder(x, X, K)


def projection_remainder(target: RegressionTarget, x: FunctionVec, X: FunctionVec,
                         J: int, K: int) -> float:
    """Taylor-sum change from replacing X - x by its first-J projection."""
    return target.projection_remainder(x, X, J, K)


def projection_bound_constant(target: RegressionTarget, x: FunctionVec,
                              cfg: EstimatorConfig) -> float:
    """sum_{k=1}^{K-1} delta^{k-1} ||g^(k)(x;.)|| / (k-1)!.

    This is the constant multiplying the tail norm in the projection-remainder
    bound; it must stay bounded for the projection bias to be controlled.
    """
    return float(sum(cfg.delta ** (k - 1) / math.factorial(k - 1)
                     * target.derivative_norm(x, k) for k in range(1, cfg.K)))


def _local_tail_norms(xs: Sequence[FunctionVec], x: FunctionVec, J: int,
                      local: np.ndarray) -> np.ndarray:
    out = np.empty(local.size)
    for i, j in enumerate(local):
        _, tail_sq = project_head(subtract(xs[j], x), J)
        out[i] = math.sqrt(max(tail_sq, 0.0))
    return out


def decompose_error(xs: Sequence[FunctionVec], ys: Sequence[float], x: FunctionVec,
                    cfg: EstimatorConfig, target: RegressionTarget,
                    eps: np.ndarray, design: LocalDesign | None = None) -> DecompositionReport:
    """Exact error decomposition, using the same noise that produced the responses."""
    if design is None:
        design = assemble(xs, ys, x, cfg, keep_xi=True)
    if design.xi_rows is None:
        raise ValueError("decompose_error needs a design assembled with keep_xi=True")
    eps = np.asarray(eps, dtype=float)

    A = design.M + np.diag(design.S_diag)
    alpha, _, _ = solve_sym(A, design.Yv)
    e0 = np.zeros(design.index_set.size)
    e0[0] = 1.0
    w, _, _ = solve_sym(A, e0)

    G = target.frechet_coefficients(x, design.index_set)
    ridge_bias = -float(w @ (design.S_diag * G))

    local = design.local_indices
    proj = np.array([target.projection_remainder(x, xs[j], cfg.J, cfg.K) for j in local])
    tayl = np.array([target.taylor_remainder(x, xs[j], cfg.K) for j in local])
    eps_local = eps[local]
    projection_bias = float(w @ (design.xi_rows.T @ proj)) if local.size else 0.0
    taylor_bias = float(w @ (design.xi_rows.T @ tayl)) if local.size else 0.0
    noise_term = float(w @ (design.xi_rows.T @ eps_local)) if local.size else 0.0

    g_hat = float(alpha[0])
    g_x = target.value(x)
    identity_residual = abs((g_hat - g_x)
                            - (ridge_bias + projection_bias + taylor_bias + noise_term))

    violations = 0
    if target.supports_norms and local.size:
        const = projection_bound_constant(target, x, cfg)
        tails = _local_tail_norms(xs, x, cfg.J, local)
        violations += int(np.sum(np.abs(proj) > const * tails + MC_ABS_SLACK))
        sup_k = target.derivative_norm_sup(x, cfg.delta, cfg.K)
        cap = cfg.delta ** cfg.K / math.factorial(cfg.K) * sup_k
        violations += int(np.sum(np.abs(tayl) > cap + MC_ABS_SLACK))

    return DecompositionReport(
        ridge_bias=ridge_bias, projection_bias=projection_bias,
        taylor_bias=taylor_bias, noise_term=noise_term,
        g_hat=g_hat, g_at_site=g_x, identity_residual=identity_residual,
        remainder_bound_violations=violations,
        inputs_trace={"J": cfg.J, "K": cfg.K, "delta": cfg.delta,
                      "n_local": design.n_local},
    )


def _site_padded(x: FunctionVec, L: int) -> np.ndarray:
    out = np.zeros(L)
    out[: min(len(x), L)] = x.coeffs[:L]
    return out


def _mask_distances(C: np.ndarray, x: FunctionVec, delta: float) -> np.ndarray:
    L = C.shape[1]
    diff = C - _site_padded(x, L)
    extra = x.tail_norm_sq
    if len(x) > L:
        extra += float(np.dot(x.coeffs[L:], x.coeffs[L:]))
    d2 = np.einsum("ij,ij->i", diff, diff) + extra
    return d2 <= delta * delta


def _local_coords(C: np.ndarray, mask: np.ndarray, x: FunctionVec, J: int) -> np.ndarray:
    """First-J projected coordinates of X - x for the masked rows."""
    sel = C[mask]
    L = max(sel.shape[1], J)
    D = np.zeros((sel.shape[0], L))
    D[:, : sel.shape[1]] = sel
    D -= _site_padded(x, L)
    return D[:, :J]


def inverse_moment_monte_carlo(model: GaussianCovariateModel, x: FunctionVec,
                               cfg: EstimatorConfig, m: int, seed: int,
                               c2: float = 1.0, c2_star_override: float | None = None,
                               max_draws: int = 10_000_000) -> BoundsReport:
    """Estimate the leading entry of the inverse conditioned moment matrix.

    The matrix is (1/m) sum_j 1_N(X_j) xi_j xi_j^T over m fresh draws; when its
    smallest Cholesky pivot falls under 1e-12 the sample size is doubled, up
    to `max_draws`, before giving up.
    """
    rng = rng_stream(seed)
    mset = cfg.index_set()
    e0 = np.zeros(mset.size)
    e0[0] = 1.0

    m_cur = int(m)
    while True:
        C = sample_coefficients(model, m_cur, rng)
        mask = _mask_distances(C, x, cfg.delta)
        n_local = int(mask.sum())
        if n_local > 0:
            coords = _local_coords(C, mask, x, cfg.J)
            rows = monomial_matrix(coords, mset)
            Mn = rows.T @ rows / m_cur
            try:
                cho = scipy.linalg.cho_factor(Mn, lower=True)
                if float(np.min(np.diag(cho[0])) ** 2) >= 1e-12:
                    u = scipy.linalg.cho_solve(cho, e0)
                    inv_moment_hat = float(u[0])
                    break
            except scipy.linalg.LinAlgError:
                pass
        if 2 * m_cur > max_draws:
            raise SingularMomentError(
                f"conditioned moment matrix singular at m={m_cur} (cap {max_draws})")
        m_cur *= 2

    p_hat = n_local / m_cur
    c2s = c2_star(model, x, cfg.delta) if c2_star_override is None else c2_star_override
    c1 = 1.0 + 2.0 * c2s
    bound = c2 * math.exp(8.0 * c1 * (cfg.K - 1)) * cfg.J ** ((8.0 * c1 + 2.0) * (cfg.K - 1)) / p_hat
    slack = 3.0 / math.sqrt(n_local)
    ok = inv_moment_hat <= bound * (1.0 + slack) + MC_ABS_SLACK

    A = m_cur * Mn + np.diag(mset.regularizer_diagonal())
    proxy, _, _ = solve_sym(A, e0)

    return BoundsReport(inv_moment_hat=inv_moment_hat, inv_moment_bound=float(bound),
                        inv_moment_pass=bool(ok), variance_proxy=float(proxy[0]),
                        smallball_hat=float(p_hat), c1=float(c1), c2=float(c2),
                        c2_star=float(c2s), draws_used=m_cur)


def variance_proxy_check(model: GaussianCovariateModel, x: FunctionVec,
                         cfg: EstimatorConfig, n: int, reps: int, seed: int,
                         inv_moment_hat: float) -> dict:
    """Replication average of the leading entry of (M + S)^{-1} against its ceiling.

    The ceiling is (2 - delta^2)/(1 - delta^2) * inv_moment_hat / n; the check
    passes within 3 Monte Carlo standard errors.
    """
    mset = cfg.index_set()
    e0 = np.zeros(mset.size)
    e0[0] = 1.0
    S = np.diag(mset.regularizer_diagonal())
    vals = np.empty(reps)
    for r in range(reps):
        rng = rng_stream(seed, r)
        C = sample_coefficients(model, n, rng)
        mask = _mask_distances(C, x, cfg.delta)
        coords = _local_coords(C, mask, x, cfg.J)
        rows = monomial_matrix(coords, mset)
        A = rows.T @ rows + S
        w, _, _ = solve_sym(A, e0)
        vals[r] = w[0]
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    factor = (2.0 - cfg.delta ** 2) / (1.0 - cfg.delta ** 2)
    bound = factor * inv_moment_hat / n
    return {"mean_proxy": mean, "se": se, "bound": float(bound),
            "pass": bool(mean <= bound + 3.0 * se + MC_ABS_SLACK),
            "n": n, "reps": reps}


def sample_conditioned(model: GaussianCovariateModel, x: FunctionVec, delta: float,
                       count: int, seed: int, batch: int = 20000,
                       max_draws: int = 50_000_000) -> tuple[np.ndarray, int]:
    """Coefficient rows of `count` draws conditioned on ||X - x|| <= delta.

    Returns (rows, total_draws); rejection sampling in batches.
    """
    rng = rng_stream(seed)
    kept: list[np.ndarray] = []
    n_kept = 0
    total = 0
    while n_kept < count:
        if total >= max_draws:
            raise SingularMomentError(
                f"conditioned sampling too slow: {n_kept}/{count} after {total} draws")
        C = sample_coefficients(model, batch, rng)
        total += batch
        mask = _mask_distances(C, x, delta)
        sel = C[mask]
        if sel.shape[0]:
            kept.append(sel)
            n_kept += sel.shape[0]
    rows = np.vstack(kept)[:count]
    return rows, total


def remainder_bound_audit(target: RegressionTarget, model: GaussianCovariateModel,
                          x: FunctionVec, cfg: EstimatorConfig, draws: int,
                          seed: int) -> dict:
    """Audit both remainder bounds on conditioned draws; counts violations.

    Checks, per accepted draw, |projection remainder| against the bound
    constant times the tail norm, and |Taylor remainder| against
    delta^K / K! times the ball supremum of the K-th derivative norm.
    """
    rows, total = sample_conditioned(model, x, cfg.delta, draws, seed)
    const = projection_bound_constant(target, x, cfg)
    cap = cfg.delta ** cfg.K / math.factorial(cfg.K) \
        * target.derivative_norm_sup(x, cfg.delta, cfg.K)

    proj_viol = 0
    tayl_viol = 0
    max_proj_ratio = 0.0
    max_tayl_ratio = 0.0
    for row in rows:
        X = FunctionVec(row)
        rd = target.projection_remainder(x, X, cfg.J, cfg.K)
        rs = target.taylor_remainder(x, X, cfg.K)
        _, tail_sq = project_head(subtract(X, x), cfg.J)
        rd_bound = const * math.sqrt(max(tail_sq, 0.0))
        if abs(rd) > rd_bound + MC_ABS_SLACK:
            proj_viol += 1
        if abs(rs) > cap + MC_ABS_SLACK:
            tayl_viol += 1
        if rd_bound > 0:
            max_proj_ratio = max(max_proj_ratio, abs(rd) / rd_bound)
        if cap > 0:
            max_tayl_ratio = max(max_tayl_ratio, abs(rs) / cap)

    return {"draws": int(rows.shape[0]), "total_draws": total,
            "projection_violations": proj_viol, "taylor_violations": tayl_viol,
            "max_projection_ratio": max_proj_ratio, "max_taylor_ratio": max_tayl_ratio,
            "projection_constant": const, "taylor_cap": cap,
            "smallball_hat": rows.shape[0] / total}


def _model_moment_bounds(model: GaussianCovariateModel, x: FunctionVec,
                         L: int) -> tuple[np.ndarray, np.ndarray]:
    z = subtract(model.mean, x)
    zc = np.zeros(L)
    zc[: min(len(z), L)] = z.coeffs[:L]
    lam = np.zeros(L)
    lam[: min(model.rank, L)] = model.eigenvalues[:L]
    return zc, lam


def conditioned_second_moment_check(model: GaussianCovariateModel, x: FunctionVec,
                                    delta: float, j_max: int, draws: int,
                                    seed: int) -> list[dict]:
    """Per-coordinate conditional second moments against z_j^2 + lambda_j."""
    rows, _ = sample_conditioned(model, x, delta, draws, seed)
    L = max(rows.shape[1], j_max)
    diff = np.zeros((rows.shape[0], L))
    diff[:, : rows.shape[1]] = rows
    diff -= _site_padded(x, L)
    zc, lam = _model_moment_bounds(model, x, L)

    out = []
    for j in range(1, j_max + 1):
        sq = diff[:, j - 1] ** 2
        est = float(sq.mean())
        se = float(sq.std(ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else 0.0
        bound = float(zc[j - 1] ** 2 + lam[j - 1])
        out.append({"j": j, "estimate": est, "se": se, "bound": bound,
                    "pass": bool(est <= bound + 3.0 * se + MC_ABS_SLACK)})
    return out


def tail_second_moment_check(model: GaussianCovariateModel, x: FunctionVec,
                             delta: float, J: int, draws: int, seed: int) -> dict:
    """Summed conditional second moments beyond coordinate J against the model tail."""
    rows, _ = sample_conditioned(model, x, delta, draws, seed)
    L = max(rows.shape[1], J + 1, len(x))
    diff = np.zeros((rows.shape[0], L))
    diff[:, : rows.shape[1]] = rows
    diff -= _site_padded(x, L)
    zc, lam = _model_moment_bounds(model, x, L)

    tail_sq = np.einsum("ij,ij->i", diff[:, J:], diff[:, J:])
    est = float(tail_sq.mean())
    se = float(tail_sq.std(ddof=1) / math.sqrt(tail_sq.size)) if tail_sq.size > 1 else 0.0
    bound = float(np.sum(zc[J:] ** 2 + lam[J:]))
    return {"J": J, "estimate": est, "se": se, "bound": bound,
            "pass": bool(est <= bound + 3.0 * se + MC_ABS_SLACK)}


def taylor_weight_check(target: RegressionTarget, x: FunctionVec,
                        cfg: EstimatorConfig) -> dict:
    """Regularizer-weighted Taylor coefficient mass against its derivative-norm ceiling.

    Compares G^T S G with sum_k J^k ||g^(k)(x;.)||^2 / k!^2; the inequality is
    deterministic, no Monte Carlo involved.
    """
    mset = cfg.index_set()
    G = target.frechet_coefficients(x, mset)
    value = float(np.sum(G * G * mset.regularizer_diagonal()))
    bound = float(sum(cfg.J ** k / math.factorial(k) ** 2
                      * target.derivative_norm(x, k) ** 2 for k in range(cfg.K)))
    return {"value": value, "bound": bound, "pass": bool(value <= bound + MC_ABS_SLACK)}
