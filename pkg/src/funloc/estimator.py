"""Ridge-regularized local polynomial estimation at a fixed site.

Given data (X_j, Y_j) and a site x, the local design collects, over the
samples with ||X_j - x|| <= delta, the monomials of the first J projected
coordinates of X_j - x up to total degree K-1.  The estimate is component 0
of the solution of (M + S) alpha = Yv, where S is the diagonal of inverse
multinomial weights; M + S is symmetric positive definite by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .basis import TRIG, Basis, FunctionVec, coeff_matrix
from .multiindex import MultiIndexSet, enumerate_indices, monomial_matrix

__all__ = [
    "EstimatorConfig",
    "LocalDesign",
    "EstimateResult",
    "DesignDataError",
    "neighborhood_mask",
    "assemble",
    "assemble_from_coords",
    "solve",
    "solve_sym",
    "estimate_at",
]


class DesignDataError(ValueError):
    """Non-finite values reached the local design."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning of one local fit: projection dimension J, degree bound K, radius delta."""

    J: int
    K: int
    delta: float
    basis: Basis = TRIG

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0,1), got {self.delta}")
        if self.J < 1 or self.K < 1:
            raise ValueError("J and K must be >= 1")

    def index_set(self) -> MultiIndexSet:
        return enumerate_indices(self.J, self.K)


@dataclass
class LocalDesign:
    """Assembled normal-equation data for one site."""

    M: np.ndarray
    S_diag: np.ndarray
    Yv: np.ndarray
    n_local: int
    index_set: MultiIndexSet
    xi_rows: np.ndarray | None = None       # (n_local, |K|) when retained
    local_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


@dataclass
class EstimateResult:
    g_hat: float
    alpha: np.ndarray
    n_local: int
    solver_report: dict
    first_order: np.ndarray = field(default_factory=lambda: np.empty(0))


def neighborhood_mask(xs: Sequence[FunctionVec], x: FunctionVec, delta: float) -> np.ndarray:
    """mask_j = [ ||X_j - x||^2 <= delta^2 ], tail mass included."""
    mat, tails = coeff_matrix(list(xs) + [x])
    diff = mat[:-1] - mat[-1]
    d2 = np.einsum("ij,ij->i", diff, diff) + tails[:-1] + tails[-1]
    return d2 <= delta * delta


def assemble_from_coords(coords: np.ndarray, y_local: np.ndarray,
                         mset: MultiIndexSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normal-equation pieces from already-projected local coordinates.

    Returns (M, Yv, rows) with M = rows^T rows and Yv = rows^T y; row order
    follows the input order, which keeps accumulation reproducible.
    """
    rows = monomial_matrix(coords, mset)
    if rows.shape[0] == 0:
        p = mset.size
        return np.zeros((p, p)), np.zeros(p), rows
    M = rows.T @ rows
    Yv = rows.T @ np.asarray(y_local, dtype=float)
    return M, Yv, rows


def assemble(xs: Sequence[FunctionVec], ys: Sequence[float], x: FunctionVec,
             cfg: EstimatorConfig, keep_xi: bool = True) -> LocalDesign:
    """Build the local design (M, S, Yv) at site x from the full dataset."""
    if len(xs) == 0:
        raise ValueError("dataset must be nonempty")
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    mset = cfg.index_set()
    ys = np.asarray(ys, dtype=float)

    L = max(max(len(f) for f in xs), len(x), cfg.J)
    mat, tails = coeff_matrix(list(xs), L)
    xpad = np.zeros(L)
    xpad[: len(x)] = x.coeffs
    diff = mat - xpad
    d2 = np.einsum("ij,ij->i", diff, diff) + tails + x.tail_norm_sq
    mask = d2 <= cfg.delta * cfg.delta

    local = np.flatnonzero(mask)
    coords = diff[local][:, : cfg.J]
    M, Yv, rows = assemble_from_coords(coords, ys[local], mset)
    return LocalDesign(M=M, S_diag=mset.regularizer_diagonal(), Yv=Yv,
                       n_local=local.size, index_set=mset,
                       xi_rows=rows if keep_xi else None, local_indices=local)


def solve_sym(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, str, float]:
    """Solve the SPD system A x = b by Cholesky, with a pivoted-LDL fallback.

    One step of iterative refinement keeps the residual well under the
    1e-10 * ||b|| contract even on ill-scaled designs.  Returns the solution,
    the method used and a condition proxy.
    """
    try:
        cho = scipy.linalg.cho_factor(A, lower=True)
        x = scipy.linalg.cho_solve(cho, b)
        x = x + scipy.linalg.cho_solve(cho, b - A @ x)
        d = np.abs(np.diag(cho[0]))
        return x, "cholesky", float((d.max() / d.min()) ** 2)
    except scipy.linalg.LinAlgError:
        # loss of positivity beyond solver tolerance: pivoted symmetric solve
        x = scipy.linalg.solve(A, b, assume_a="sym")
        x = x + scipy.linalg.solve(A, b - A @ x, assume_a="sym")
        return x, "ldl", float(np.linalg.cond(A))


def solve(design: LocalDesign) -> EstimateResult:
    """Solve (M + S) alpha = Yv; the estimate is the constant component alpha[0]."""
    A = design.M + np.diag(design.S_diag)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(design.Yv))):
        raise DesignDataError("local design contains non-finite entries")

    alpha, method, cond_proxy = solve_sym(A, design.Yv)
    residual = float(np.linalg.norm(A @ alpha - design.Yv))
    report = {"method": method, "residual": residual, "cond_proxy": cond_proxy}
    return EstimateResult(g_hat=float(alpha[0]), alpha=alpha,
                          n_local=design.n_local, solver_report=report)


def estimate_at(xs: Sequence[FunctionVec], ys: Sequence[float], x: FunctionVec,
                cfg: EstimatorConfig, keep_xi: bool = False) -> EstimateResult:
    """assemble + solve; also exposes the degree-one coefficients of alpha."""
    design = assemble(xs, ys, x, cfg, keep_xi=keep_xi)
    result = solve(design)
    pos = design.index_set.degree_one_positions()
    result.first_order = result.alpha[pos]
    return result
