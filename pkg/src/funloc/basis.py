"""Orthonormal-basis representation of functions in L2([0,1]).

Functions are carried as coefficient vectors against a fixed orthonormal
basis, plus an optional scalar recording the squared mass beyond the stored
coefficients.  Grid data enter only through midpoint-rule quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Basis",
    "FunctionVec",
    "TRIG",
    "inner_product",
    "norm_sq",
    "project_head",
    "subtract",
    "analyze_grid",
    "synthesize",
    "midpoint_grid",
    "coeff_matrix",
]


def _trig_eval(l: int, t):
    """Trigonometric system: 1, sqrt(2)cos(2*pi*m*t), sqrt(2)sin(2*pi*m*t)."""
    if l == 1:
        return np.ones_like(np.asarray(t, dtype=float))
    m = l // 2
    if l % 2 == 0:
        return np.sqrt(2.0) * np.cos(2.0 * np.pi * m * np.asarray(t, dtype=float))
    return np.sqrt(2.0) * np.sin(2.0 * np.pi * m * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Basis:
    """Orthonormal basis of L2([0,1]), evaluated pointwise by index l >= 1."""

    kind: str
    evaluator: Callable[[int, np.ndarray], np.ndarray]

    @classmethod
    def trigonometric(cls) -> "Basis":
        return cls(kind="trigonometric", evaluator=_trig_eval)

    @classmethod
    def from_evaluator(cls, fn: Callable[[int, np.ndarray], np.ndarray]) -> "Basis":
        """Wrap a user-supplied orthonormal system; orthonormality is the caller's duty."""
        return cls(kind="user", evaluator=fn)

    def eval_matrix(self, l_max: int, grid: np.ndarray) -> np.ndarray:
        """Matrix of basis values, shape (len(grid), l_max)."""
        grid = np.asarray(grid, dtype=float)
        out = np.empty((grid.size, l_max))
        for l in range(1, l_max + 1):
            out[:, l - 1] = self.evaluator(l, grid)
        return out


TRIG = Basis.trigonometric()


@dataclass(frozen=True)
class FunctionVec:
    """A function as basis coefficients (c_1, ..., c_L) plus unresolved tail mass.

    tail_norm_sq is the squared norm of the component beyond index L; it is 0
    for exactly finite-rank functions, which covers everything simulated here.
    """

    coeffs: np.ndarray
    tail_norm_sq: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        if not (self.tail_norm_sq >= 0.0 and np.isfinite(self.tail_norm_sq)):
            raise ValueError("tail_norm_sq must be finite and nonnegative")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "tail_norm_sq", float(self.tail_norm_sq))

    def __len__(self) -> int:
        return self.coeffs.size

    @classmethod
    def zero(cls, L: int = 1) -> "FunctionVec":
        return cls(np.zeros(L))

    @classmethod
    def unit(cls, l: int) -> "FunctionVec":
        """The basis function phi_l as a coefficient vector."""
        c = np.zeros(l)
        c[l - 1] = 1.0
        return cls(c)


def _pad(c: np.ndarray, L: int) -> np.ndarray:
    if c.size >= L:
        return c[:L]
    return np.concatenate([c, np.zeros(L - c.size)])


def inner_product(f: FunctionVec, g: FunctionVec) -> float:
    """Coefficient inner product; shorter vector is zero-padded.

    Tail masses do not contribute: cross-tail terms are taken as 0, which is
    exact whenever at least one operand is finite-rank.
    """
    n = min(len(f), len(g))
    return float(np.dot(f.coeffs[:n], g.coeffs[:n]))


def norm_sq(f: FunctionVec) -> float:
    """Squared norm, tail mass included."""
    return float(np.dot(f.coeffs, f.coeffs)) + f.tail_norm_sq


def project_head(f: FunctionVec, J: int) -> tuple[np.ndarray, float]:
    """Split f into its first J coefficients and the squared mass beyond them."""
    if J < 1:
        raise ValueError("J must be >= 1")
    head = _pad(f.coeffs, J)
    tail = float(np.dot(f.coeffs[J:], f.coeffs[J:])) + f.tail_norm_sq
    return head, tail


def subtract(f: FunctionVec, g: FunctionVec) -> FunctionVec:
    """f - g coefficientwise; tail masses add (cross-tail inner product taken as 0)."""
    L = max(len(f), len(g))
    return FunctionVec(_pad(f.coeffs, L) - _pad(g.coeffs, L),
                       f.tail_norm_sq + g.tail_norm_sq)


def midpoint_grid(N: int) -> np.ndarray:
    """Composite-midpoint nodes (i + 1/2)/N on [0,1]."""
    return (np.arange(N) + 0.5) / N


def analyze_grid(samples: Sequence[float], basis: Basis, L: int) -> FunctionVec:
    """Project uniform-grid samples onto the first L basis functions.

    Coefficients come from midpoint quadrature of sample * phi_l; the residual
    quadrature mass becomes tail_norm_sq.  Requires N >= 4L so that products
    of basis functions are integrated exactly for the trigonometric system.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 1:
        raise ValueError("samples must be 1-d")
    N = s.size
    if L < 1:
        raise ValueError("L must be >= 1")
    if N < 4 * L:
        raise ValueError(f"grid too coarse: N={N} < 4*L={4 * L}")
    phi = basis.eval_matrix(L, midpoint_grid(N))
    coeffs = phi.T @ s / N
    total = float(np.dot(s, s)) / N
    tail = max(0.0, total - float(np.dot(coeffs, coeffs)))
    return FunctionVec(coeffs, tail)


def synthesize(f: FunctionVec, basis: Basis, N: int) -> np.ndarray:
    """Evaluate the finite-rank part of f on the N-point midpoint grid."""
    phi = basis.eval_matrix(len(f), midpoint_grid(N))
    return phi @ f.coeffs


def coeff_matrix(xs: Sequence[FunctionVec], L: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stack coefficient vectors into an (n, L) matrix plus tail vector."""
    if L is None:
        L = max(len(x) for x in xs)
    mat = np.zeros((len(xs), L))
    tails = np.zeros(len(xs))
    for i, x in enumerate(xs):
        mat[i, : min(len(x), L)] = x.coeffs[:L]
        if len(x) > L:
            tails[i] = float(np.dot(x.coeffs[L:], x.coeffs[L:])) + x.tail_norm_sq
        else:
            tails[i] = x.tail_norm_sq
    return mat, tails
