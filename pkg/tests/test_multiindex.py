import math

import numpy as np
import pytest

from funloc.multiindex import (
    SizeCapError,
    enumerate_indices,
    monomial,
    monomial_matrix,
    monomial_row,
    multinomial,
)
from support import oracle_index_set


def test_enumerate_j2_k3_order():
    s = enumerate_indices(2, 3)
    expected = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert [tuple(r) for r in s.indices] == expected


def test_enumerate_degenerate_and_unit_cases():
    s = enumerate_indices(1, 1)
    assert [tuple(r) for r in s.indices] == [(0,)]
    s = enumerate_indices(3, 2)
    assert [tuple(r) for r in s.indices] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]


@pytest.mark.parametrize("J", range(1, 7))
@pytest.mark.parametrize("K", range(1, 7))
def test_cardinality_matches_brute_force(J, K):
    s = enumerate_indices(J, K)
    brute = oracle_index_set(J, K)
    assert s.size == math.comb(J + K - 1, J) == len(brute)
    assert {tuple(r) for r in s.indices} == brute


def test_grading_invariants():
    s = enumerate_indices(4, 5)
    assert tuple(s.indices[0]) == (0, 0, 0, 0)
    assert np.all(np.diff(s.degrees) >= 0)
    assert np.all(s.multinomials >= 1)
    assert s.multinomials[0] == 1


def test_size_cap_names_the_binomial():
    with pytest.raises(SizeCapError, match="184756"):
        enumerate_indices(10, 11, cap=20000)
    with pytest.raises(ValueError, match="exceeds"):
        enumerate_indices(2, 21)


def test_multinomial_examples():
    assert multinomial((0, 0, 0)) == 1
    assert multinomial((1, 1)) == 2
    assert multinomial((2, 1)) == 3
    with pytest.raises(ValueError):
        multinomial((-1, 2))


def test_monomial_examples():
    assert monomial([3.7, -1.2], (0, 0)) == 1.0
    assert monomial([0.5, -0.2], (2, 1)) == pytest.approx(-0.05)
    assert monomial([0.0, 3.0], (1, 0)) == 0.0
    # 0^0 = 1 so the zero coordinate with zero exponent contributes nothing
    assert monomial([0.0, 2.0], (0, 2)) == 4.0


def test_monomial_row_example_and_zero():
    s = enumerate_indices(2, 3)
    row = monomial_row([0.5, -0.2], s)
    assert np.allclose(row, [1.0, 0.5, -0.2, 0.25, -0.1, 0.04])
    row0 = monomial_row([0.0, 0.0], s)
    assert row0[0] == 1.0 and np.all(row0[1:] == 0.0)


def test_monomial_row_matches_elementwise_on_random_draws():
    rng = np.random.default_rng(7)
    s = enumerate_indices(3, 4)
    for _ in range(100):
        coords = rng.normal(size=3)
        row = monomial_row(coords, s)
        direct = [monomial(coords, k) for k in s.indices]
        assert np.allclose(row, direct, rtol=1e-13, atol=1e-300)


def test_monomial_matrix_shape_and_consistency():
    rng = np.random.default_rng(8)
    s = enumerate_indices(2, 4)
    pts = rng.normal(size=(17, 2))
    mat = monomial_matrix(pts, s)
    assert mat.shape == (17, s.size)
    for i in range(17):
        assert np.allclose(mat[i], monomial_row(pts[i], s))
    with pytest.raises(ValueError):
        monomial_matrix(pts[:, :1], s)


def test_multinomial_sum_identity():
    """sum over |k| = m of multinomial(k) prod p^k equals (sum p)^m."""
    rng = np.random.default_rng(9)
    for _ in range(20):
        J = int(rng.integers(1, 5))
        m = int(rng.integers(0, 7))
        p = rng.uniform(0.0, 1.5, size=J)
        s = enumerate_indices(J, m + 1)
        sel = s.degrees == m
        total = sum(multinomial(k) * monomial(p, k)
                    for k in s.indices[sel])
        assert total == pytest.approx(p.sum() ** m, rel=1e-12)
