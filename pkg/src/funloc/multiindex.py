"""Total-degree multi-index sets, multinomial weights and monomial evaluation.

The index set holds all k in N_0^J with |k| <= K-1 in graded order (degree
first, then descending lexicographic), zero index first, so the constant
coefficient is always component 0 of any solution vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "MultiIndexSet",
    "SizeCapError",
    "enumerate_indices",
    "multinomial",
    "monomial",
    "monomial_row",
    "monomial_matrix",
]

DEFAULT_CAP = 20000
MAX_DEGREE_BOUND = 20  # keeps multinomials exact in int64

_INT64_MAX = np.iinfo(np.int64).max


class SizeCapError(ValueError):
    """Requested index set exceeds the configured size cap."""


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    # descending lexicographic: first coordinate largest first
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def multinomial(k: Sequence[int]) -> int:
    """|k|! / (k_1! ... k_J!), exact integer arithmetic."""
    ks = [int(v) for v in k]
    if any(v < 0 for v in ks):
        raise ValueError("multi-index entries must be nonnegative")
    out = math.factorial(sum(ks))
    for v in ks:
        out //= math.factorial(v)
    return out


@dataclass(frozen=True)
class MultiIndexSet:
    """Ordered enumeration of {k : |k| <= K-1} with per-index multinomials."""

    J: int
    K: int
    indices: np.ndarray       # (size, J) int64
    multinomials: np.ndarray  # (size,) int64
    degrees: np.ndarray       # (size,) int64, |k| per index
    parent: np.ndarray        # (size,) position of k - e_l for the first l with k_l > 0
    parent_coord: np.ndarray  # (size,) that coordinate l (0-based)

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def position(self, k: Sequence[int]) -> int:
        key = tuple(int(v) for v in k)
        return self._lookup[key]

    @property
    def _lookup(self) -> dict:
        # built lazily; frozen dataclass, so stash on the instance dict via object.__setattr__
        cached = self.__dict__.get("_lookup_cache")
        if cached is None:
            cached = {tuple(int(v) for v in row): i for i, row in enumerate(self.indices)}
            object.__setattr__(self, "_lookup_cache", cached)
        return cached

    def degree_one_positions(self) -> np.ndarray:
        """Positions of the unit multi-indices e_1..e_J (empty when K == 1)."""
        return np.flatnonzero(self.degrees == 1)

    def regularizer_diagonal(self) -> np.ndarray:
        """Diagonal of the Tikhonov matrix: 1 / multinomial(k) per index."""
        return 1.0 / self.multinomials.astype(float)


def enumerate_indices(J: int, K: int, cap: int = DEFAULT_CAP) -> MultiIndexSet:
    """Build the graded index set for dimension J and degree bound K-1.

    Raises SizeCapError when binomial(J+K-1, J) exceeds `cap`, and rejects
    K > 20 so multinomial weights stay exact in 64-bit integers.
    """
    if J < 1 or K < 1:
        raise ValueError("J and K must be >= 1")
    if K > MAX_DEGREE_BOUND:
        raise ValueError(f"K={K} exceeds the supported bound {MAX_DEGREE_BOUND}")
    size = math.comb(J + K - 1, J)
    if size > cap:
        raise SizeCapError(
            f"index set has binomial(J+K-1, J) = {size} elements, above the cap {cap}"
        )

    rows = []
    for deg in range(K):
        rows.extend(_compositions(deg, J))
    indices = np.array(rows, dtype=np.int64).reshape(size, J)
    degrees = indices.sum(axis=1)

    mults = np.empty(size, dtype=np.int64)
    for i, row in enumerate(rows):
        m = multinomial(row)
        if m > _INT64_MAX:
            raise OverflowError(f"multinomial of {row} overflows int64")
        mults[i] = m

    pos = {row: i for i, row in enumerate(rows)}
    parent = np.zeros(size, dtype=np.int64)
    parent_coord = np.zeros(size, dtype=np.int64)
    for i, row in enumerate(rows):
        if degrees[i] == 0:
            continue
        l = next(j for j, v in enumerate(row) if v > 0)
        par = row[:l] + (row[l] - 1,) + row[l + 1:]
        parent[i] = pos[par]
        parent_coord[i] = l

    return MultiIndexSet(J=J, K=K, indices=indices, multinomials=mults,
                         degrees=degrees, parent=parent, parent_coord=parent_coord)


def monomial(coords: Sequence[float], k: Sequence[int]) -> float:
    """prod_l coords_l ** k_l with the 0**0 = 1 convention."""
    c = np.asarray(coords, dtype=float)
    e = np.asarray(k, dtype=np.int64)
    if c.shape != e.shape:
        raise ValueError("coords and multi-index must have equal length")
    return float(np.prod(c ** e))


def monomial_row(coords: Sequence[float], mset: MultiIndexSet) -> np.ndarray:
    """All monomials of `coords` in set order, built incrementally by grading."""
    return monomial_matrix(np.asarray(coords, dtype=float)[None, :], mset)[0]


def monomial_matrix(coords: np.ndarray, mset: MultiIndexSet) -> np.ndarray:
    """Monomial rows for many points at once; coords has shape (m, J)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != mset.J:
        raise ValueError(f"coords must have shape (m, {mset.J})")
    m = coords.shape[0]
    out = np.empty((m, mset.size))
    out[:, 0] = 1.0
    for i in range(1, mset.size):
        out[:, i] = out[:, mset.parent[i]] * coords[:, mset.parent_coord[i]]
    return out
