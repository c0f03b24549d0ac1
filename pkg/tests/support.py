"""Shared test helpers: independent oracles coded without the package internals.

The estimation oracle rebuilds the local system from first principles
(itertools enumeration, direct power products, mpmath inverse at 50 digits)
so agreement with the fast path is a genuine cross-check.
"""

from itertools import product
from math import factorial

import mpmath
import numpy as np

from funloc.basis import FunctionVec


def oracle_index_set(J, K):
    """All exponent vectors with total degree <= K-1, as a set of tuples."""
    return {k for k in product(range(K), repeat=J) if sum(k) <= K - 1}


def oracle_multinomial(k):
    return factorial(sum(k)) // np.prod([factorial(v) for v in k], dtype=object)


def _pad(vals, L):
    out = [0.0] * L
    out[: len(vals)] = list(vals[:L])
    return out


def oracle_estimate(xs, ys, x, J, K, delta, dps=50):
    """Constant coefficient of the penalized local fit, via mpmath inverse.

    xs: list of FunctionVec, ys: responses, x: FunctionVec site.  Distances,
    monomials and the linear solve are all recomputed independently.
    """
    with mpmath.workdps(dps):
        L = max(max(len(f) for f in xs), len(x), J)
        xc = _pad(x.coeffs, L)

        # ordered enumeration: zero index first (any fixed order works)
        indices = sorted(oracle_index_set(J, K), key=lambda k: (sum(k), k))
        p = len(indices)
        M = mpmath.zeros(p, p)
        Yv = mpmath.zeros(p, 1)
        for f, y in zip(xs, ys):
            fc = _pad(f.coeffs, L)
            diff = [mpmath.mpf(a) - mpmath.mpf(b) for a, b in zip(fc, xc)]
            dist2 = (sum(d * d for d in diff) + mpmath.mpf(f.tail_norm_sq)
                     + mpmath.mpf(x.tail_norm_sq))
            if dist2 > mpmath.mpf(delta) ** 2:
                continue
            row = [mpmath.mpf(1)] * p
            for i, k in enumerate(indices):
                v = mpmath.mpf(1)
                for l, e in enumerate(k):
                    if e:
                        v *= diff[l] ** e
                row[i] = v
            for i in range(p):
                Yv[i] += row[i] * mpmath.mpf(y)
                for j in range(p):
                    M[i, j] += row[i] * row[j]
        for i, k in enumerate(indices):
            M[i, i] += mpmath.mpf(1) / int(oracle_multinomial(k))
        alpha = mpmath.lu_solve(M, Yv)
        zero_pos = indices.index(tuple([0] * J))
        return float(alpha[zero_pos])


def random_dataset(rng, n, L=3, spread=0.25):
    """Small cloud of finite-rank curves around zero, for solver checks."""
    coeffs = rng.normal(0.0, spread, size=(n, L))
    return [FunctionVec(row) for row in coeffs]
