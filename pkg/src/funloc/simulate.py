"""Gaussian functional covariates, smooth regression targets and noisy responses.

Covariates are drawn as mean + sum_j sqrt(lambda_j) eta_j phi_j with i.i.d.
standard normal eta_j, truncated to a finite rank so that every downstream
identity is exact.  Targets come with closed-form directional derivatives of
all orders, which is what makes the error decomposition testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import TRIG, Basis, FunctionVec, inner_product, norm_sq, project_head, subtract
from .multiindex import MultiIndexSet, monomial_matrix, monomial_row

__all__ = [
    "GaussianCovariateModel",
    "NoiseModel",
    "RegressionTarget",
    "ExpLinear",
    "CosLinear",
    "Quadratic",
    "PolyCoord",
    "UnsupportedTargetError",
    "rng_stream",
    "exponential_eigenvalues",
    "polynomial_eigenvalues",
    "truncate_eigenvalues",
    "sample_coefficients",
    "sample_covariates",
    "respond",
    "respond_rows",
    "frechet_coefficients",
    "taylor_polynomial",
    "c2_star",
    "make_target",
]


class UnsupportedTargetError(ValueError):
    """The target kind has no closed form for the requested quantity."""


def rng_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for a (study, n, replication, purpose) path.

    Streams are derived from the master seed and the integer path only, so
    parallel execution order cannot change any draw.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def exponential_eigenvalues(L: int, c_lambda: float = 1.0, c_gamma1: float = 1.0,
                            gamma: float = 2.0) -> np.ndarray:
    """lambda_j = c_lambda * exp(-c_gamma1 * j^gamma), j = 1..L."""
    j = np.arange(1, L + 1, dtype=float)
    return c_lambda * np.exp(-c_gamma1 * j ** gamma)


def polynomial_eigenvalues(L: int, c_lambda: float = 1.0, p: float = 2.0) -> np.ndarray:
    """lambda_j = c_lambda * j^(-p), j = 1..L (slow-decay contrast regime)."""
    j = np.arange(1, L + 1, dtype=float)
    return c_lambda * j ** (-p)


def truncate_eigenvalues(lams: np.ndarray, rel_tail: float = 1e-12) -> np.ndarray:
    """Shortest prefix whose discarded tail is <= rel_tail of the total mass."""
    lams = np.asarray(lams, dtype=float)
    total = lams.sum()
    suffix = np.cumsum(lams[::-1])[::-1]  # suffix[i] = sum lams[i:]
    keep = lams.size
    for L in range(1, lams.size + 1):
        tail = suffix[L] if L < lams.size else 0.0
        if tail <= rel_tail * total:
            keep = L
            break
    return lams[:keep]


@dataclass(frozen=True)
class GaussianCovariateModel:
    """Mean function, eigenvalue sequence and basis of the covariate law."""

    mean: FunctionVec
    eigenvalues: np.ndarray
    basis: Basis = TRIG

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size < 1:
            raise ValueError("eigenvalues must be a nonempty 1-d sequence")
        if not np.all(ev > 0.0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(ev) > 0.0):
            raise ValueError("eigenvalues must be nonincreasing")
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def rank(self) -> int:
        return self.eigenvalues.size


def sample_coefficients(model: GaussianCovariateModel, n: int,
                        rng: np.random.Generator) -> np.ndarray:
    """(n, L) coefficient matrix of n independent covariate draws."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = max(model.rank, len(model.mean))
    sd = np.zeros(L)
    sd[: model.rank] = np.sqrt(model.eigenvalues)
    mean = np.zeros(L)
    mean[: len(model.mean)] = model.mean.coeffs
    return mean + rng.standard_normal((n, L)) * sd


def sample_covariates(model: GaussianCovariateModel, n: int,
                      seed: int | np.random.Generator) -> list[FunctionVec]:
    """n covariate draws as finite-rank FunctionVec values; deterministic given seed."""
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(int(seed))
    mat = sample_coefficients(model, n, rng)
    return [FunctionVec(row) for row in mat]


@dataclass(frozen=True)
class NoiseModel:
    """Conditionally centered noise with variance bounded by sigma^2."""

    sigma: float = 0.0
    law: str = "gaussian"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.law not in ("gaussian", "uniform", "none"):
            raise ValueError(f"unknown noise law: {self.law!r}")

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.law == "none" or self.sigma == 0.0:
            return np.zeros(n)
        if self.law == "gaussian":
            return rng.normal(0.0, self.sigma, n)
        half = self.sigma * math.sqrt(3.0)  # Var U(-a, a) = a^2/3
        return rng.uniform(-half, half, n)


def _pad_to(vec: np.ndarray, L: int) -> np.ndarray:
    if vec.size >= L:
        return vec[:L]
    return np.concatenate([vec, np.zeros(L - vec.size)])


def _rows_dot(C: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Row-wise inner products of coefficient rows with a fixed vector."""
    m = min(C.shape[1], vec.size)
    return C[:, :m] @ vec[:m]


class RegressionTarget:
    """Common surface of every target kind."""

    supports_norms = True

    def value(self, u: FunctionVec) -> float:
        raise NotImplementedError

    def value_rows(self, C: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def frechet_coefficients(self, x: FunctionVec, mset: MultiIndexSet) -> np.ndarray:
        raise NotImplementedError

    def derivative_norm(self, x: FunctionVec, order: int) -> float:
        """Operator norm of the order-th derivative at x."""
        raise UnsupportedTargetError(f"{type(self).__name__} has no closed-form derivative norm")

    def derivative_norm_sup(self, x: FunctionVec, delta: float, order: int) -> float:
        """Upper bound of derivative_norm over the ball of radius delta around x."""
        raise UnsupportedTargetError(f"{type(self).__name__} has no closed-form derivative norm")

    def taylor_remainder(self, x: FunctionVec, X: FunctionVec, K: int) -> float:
        """g(X) minus the degree-(K-1) Taylor polynomial at x in direction X - x."""
        raise NotImplementedError

    def projection_remainder(self, x: FunctionVec, X: FunctionVec, J: int, K: int) -> float:
        """Taylor-sum change when X - x is replaced by its first-J projection."""
        raise NotImplementedError


class _RidgeTarget(RegressionTarget):
    """g(u) = h(<theta, u>) for a scalar profile h with derivatives of all orders."""

    def __init__(self, theta: FunctionVec):
        self.theta = theta
        self._theta_norm = math.sqrt(norm_sq(theta))

    # profile h and its derivatives; subclasses fill these in
    def _h(self, t: float, order: int) -> float:
        raise NotImplementedError

    def _h_sup_abs(self, center: float, radius: float, order: int) -> float:
        """sup |h^(order)| over [center - radius, center + radius]."""
        raise NotImplementedError

    def _score(self, u: FunctionVec) -> float:
        return inner_product(self.theta, u)

    def value(self, u: FunctionVec) -> float:
        return self._h(self._score(u), 0)

    def value_rows(self, C: np.ndarray) -> np.ndarray:
        return self._h(_rows_dot(C, self.theta.coeffs), 0)

    def frechet_coefficients(self, x: FunctionVec, mset: MultiIndexSet) -> np.ndarray:
        c = self._score(x)
        tj = _pad_to(self.theta.coeffs, mset.J)
        powers = monomial_row(tj, mset)  # prod_l theta_l^{k_l}
        degs = mset.degrees
        hvals = np.array([self._h(c, int(d)) for d in range(int(degs.max()) + 1)])
        fact = np.array([math.factorial(int(d)) for d in range(int(degs.max()) + 1)])
        # prod theta^{k_l} / prod k_l! = powers * multinomial(k) / |k|!
        return hvals[degs] * powers * mset.multinomials / fact[degs]

    def derivative_norm(self, x: FunctionVec, order: int) -> float:
        return abs(self._h(self._score(x), order)) * self._theta_norm ** order

    def derivative_norm_sup(self, x: FunctionVec, delta: float, order: int) -> float:
        c = self._score(x)
        return self._h_sup_abs(c, delta * self._theta_norm, order) * self._theta_norm ** order

    def taylor_remainder(self, x: FunctionVec, X: FunctionVec, K: int) -> float:
        c = self._score(x)
        s = self._score(subtract(X, x))
        partial = sum(self._h(c, k) * s ** k / math.factorial(k) for k in range(K))
        return self._h(c + s, 0) - partial

    def projection_remainder(self, x: FunctionVec, X: FunctionVec, J: int, K: int) -> float:
        c = self._score(x)
        diff = subtract(X, x)
        s = self._score(diff)
        head, _ = project_head(diff, J)
        s_j = float(np.dot(_pad_to(self.theta.coeffs, J), head))
        return sum(self._h(c, k) * (s ** k - s_j ** k) / math.factorial(k)
                   for k in range(1, K))


class ExpLinear(_RidgeTarget):
    """g(u) = exp(<theta, u>); every derivative norm equals exp(<theta,x>) ||theta||^k."""

    def _h(self, t, order):
        return np.exp(t)

    def _h_sup_abs(self, center, radius, order):
        return math.exp(center + radius)


class CosLinear(_RidgeTarget):
    """g(u) = cos(<theta, u>).

    The ball supremum of |cos^(k)| is reported through the envelope 1, a
    conservative upper bound.
    """

    _CYCLE = (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin)

    def _h(self, t, order):
        return self._CYCLE[order % 4](t)

    def _h_sup_abs(self, center, radius, order):
        return 1.0


class Quadratic(_RidgeTarget):
    """g(u) = <theta, u>^2; derivatives of order three and higher vanish."""

    def _h(self, t, order):
        if order == 0:
            return t * t
        if order == 1:
            return 2.0 * t
        if order == 2:
            return 2.0 * np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 2.0
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0

    def _h_sup_abs(self, center, radius, order):
        reach = abs(center) + radius
        if order == 0:
            return reach * reach
        if order == 1:
            return 2.0 * reach
        if order == 2:
            return 2.0
        return 0.0


class PolyCoord(RegressionTarget):
    """Polynomial in the first coordinates of u - anchor, given by a coefficient table.

    Reproduced exactly by the local fit whenever its degree and dimension fit
    inside the estimator's; derivative operator norms have no simple closed
    form and are not provided.
    """

    supports_norms = False

    def __init__(self, table: MultiIndexSet, coeffs: Sequence[float],
                 anchor: FunctionVec | None = None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (table.size,):
            raise ValueError(f"coeffs must have length {table.size}")
        self.table = table
        self.coeffs = coeffs
        self.anchor = anchor if anchor is not None else FunctionVec.zero(table.J)

    def _v(self, u: FunctionVec) -> np.ndarray:
        head, _ = project_head(subtract(u, self.anchor), self.table.J)
        return head

    def value(self, u: FunctionVec) -> float:
        return float(self.coeffs @ monomial_row(self._v(u), self.table))

    def value_rows(self, C: np.ndarray) -> np.ndarray:
        J0 = self.table.J
        V = np.zeros((C.shape[0], J0))
        m = min(C.shape[1], J0)
        V[:, :m] = C[:, :m]
        V -= _pad_to(self.anchor.coeffs, J0)
        return monomial_matrix(V, self.table) @ self.coeffs

    def frechet_coefficients(self, x: FunctionVec, mset: MultiIndexSet) -> np.ndarray:
        v = self._v(x)
        J0 = self.table.J
        out = np.zeros(mset.size)
        for i, k in enumerate(mset.indices):
            if np.any(k[J0:] > 0):
                continue  # no dependence on coordinates beyond the table
            kk = k[:J0] if mset.J >= J0 else np.concatenate([k, np.zeros(J0 - mset.J, dtype=k.dtype)])
            acc = 0.0
            for m, cm in zip(self.table.indices, self.coeffs):
                if np.any(m < kk):
                    continue
                term = cm
                for l in range(J0):
                    term *= math.comb(int(m[l]), int(kk[l])) * v[l] ** int(m[l] - kk[l])
                acc += term
            out[i] = acc
        return out

    def _lambda_poly(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Coefficients in lambda of P(v + lambda w), length = table degree + 1."""
        from numpy.polynomial import polynomial as npoly
        acc = np.zeros(self.table.K)
        for m, cm in zip(self.table.indices, self.coeffs):
            poly = np.array([1.0])
            for l in range(self.table.J):
                if m[l] > 0:
                    poly = npoly.polymul(poly, npoly.polypow([v[l], w[l]], int(m[l])))
            acc[: poly.size] += cm * poly
        return acc

    def taylor_remainder(self, x: FunctionVec, X: FunctionVec, K: int) -> float:
        v = self._v(x)
        w, _ = project_head(subtract(X, x), self.table.J)
        q = self._lambda_poly(v, w)
        return float(q[K:].sum()) if K < q.size else 0.0

    def projection_remainder(self, x: FunctionVec, X: FunctionVec, J: int, K: int) -> float:
        v = self._v(x)
        w, _ = project_head(subtract(X, x), self.table.J)
        w_j = w.copy()
        w_j[J:] = 0.0
        q = self._lambda_poly(v, w)
        q_j = self._lambda_poly(v, w_j)
        hi = min(K, q.size)
        return float((q[1:hi] - q_j[1:hi]).sum())


def respond(target: RegressionTarget, noise: NoiseModel, xs: Sequence[FunctionVec],
            seed: int | np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Responses Y_j = g(X_j) + eps_j; the realized eps are returned alongside."""
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(int(seed))
    g = np.array([target.value(x) for x in xs])
    eps = noise.draw(len(xs), rng)
    return g + eps, eps


def respond_rows(target: RegressionTarget, noise: NoiseModel, C: np.ndarray,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized respond() on an (n, L) coefficient matrix."""
    g = target.value_rows(C)
    eps = noise.draw(C.shape[0], rng)
    return g + eps, eps


def frechet_coefficients(target: RegressionTarget, x: FunctionVec,
                         mset: MultiIndexSet) -> np.ndarray:
    """Taylor coefficients of the target over the index set, in set order."""
    return target.frechet_coefficients(x, mset)


def taylor_polynomial(target: RegressionTarget, x: FunctionVec, mset: MultiIndexSet,
                      coords: Sequence[float]) -> float:
    """Degree-(K-1) Taylor polynomial of the target, evaluated at projected coordinates."""
    G = target.frechet_coefficients(x, mset)
    return float(G @ monomial_row(np.asarray(coords, dtype=float), mset))


def c2_star(model: GaussianCovariateModel, x: FunctionVec, delta: float) -> float:
    """sup_j <mean - x, phi_j>^2 / (lambda_j delta^2); inf when mass escapes the rank."""
    z = subtract(model.mean, x)
    if z.tail_norm_sq > 0.0:
        return math.inf
    L = model.rank
    zc = z.coeffs
    if zc.size > L and np.any(zc[L:] != 0.0):
        return math.inf
    m = min(zc.size, L)
    ratios = zc[:m] ** 2 / model.eigenvalues[:m]
    sup = float(ratios.max()) if ratios.size else 0.0
    return sup / (delta * delta)


def make_target(kind: str, theta: FunctionVec | None = None,
                table: MultiIndexSet | None = None,
                coeffs: Sequence[float] | None = None,
                anchor: FunctionVec | None = None) -> RegressionTarget:
    """Construct a target by kind name (used by the config layer)."""
    if kind in ("exp_linear", "cos_linear", "quadratic"):
        if theta is None:
            raise ValueError(f"target kind {kind!r} requires theta")
        cls = {"exp_linear": ExpLinear, "cos_linear": CosLinear, "quadratic": Quadratic}[kind]
        return cls(theta)
    if kind == "poly_coord":
        if table is None or coeffs is None:
            raise ValueError("poly_coord requires an index table and coefficients")
        return PolyCoord(table, coeffs, anchor)
    raise ValueError(f"unknown target kind: {kind!r}")
