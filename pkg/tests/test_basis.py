import numpy as np
import pytest

from funloc.basis import (
    TRIG,
    FunctionVec,
    analyze_grid,
    coeff_matrix,
    inner_product,
    midpoint_grid,
    norm_sq,
    project_head,
    subtract,
    synthesize,
)


def test_trig_discrete_orthonormality():
    """Gram matrix of the first 12 basis functions under midpoint quadrature."""
    l_max = 12
    N = 4 * l_max
    phi = TRIG.eval_matrix(l_max, midpoint_grid(N))
    gram = phi.T @ phi / N
    assert np.max(np.abs(gram - np.eye(l_max))) <= 1e-8


def test_inner_product_examples():
    assert inner_product(FunctionVec.unit(2), FunctionVec.unit(2)) == 1.0
    assert inner_product(FunctionVec.unit(1), FunctionVec.unit(2)) == 0.0
    assert inner_product(FunctionVec([0.5, -0.2]), FunctionVec([2.0, 1.0])) == pytest.approx(0.8)


def test_inner_product_ignores_tails():
    f = FunctionVec([1.0], tail_norm_sq=4.0)
    g = FunctionVec([2.0], tail_norm_sq=9.0)
    assert inner_product(f, g) == 2.0


def test_norm_sq_examples():
    assert norm_sq(FunctionVec.zero(3)) == 0.0
    assert norm_sq(FunctionVec([3.0, 4.0])) == 25.0
    assert norm_sq(FunctionVec([1.0], tail_norm_sq=0.25)) == 1.25


def test_project_head_examples():
    head, tail = project_head(FunctionVec([1.0, 2.0, 3.0]), 2)
    assert np.array_equal(head, [1.0, 2.0])
    assert tail == 9.0

    head, tail = project_head(FunctionVec([1.0, 2.0, 3.0]), 5)
    assert np.array_equal(head, [1.0, 2.0, 3.0, 0.0, 0.0])
    assert tail == 0.0

    head, tail = project_head(FunctionVec([1.0], tail_norm_sq=0.5), 1)
    assert np.array_equal(head, [1.0])
    assert tail == 0.5


def test_parseval_and_split_consistency():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f = FunctionVec(rng.normal(size=rng.integers(1, 9)))
        assert norm_sq(f) == inner_product(f, f)
        for J in (1, 2, 5):
            head, tail = project_head(f, J)
            assert abs(float(head @ head) + tail - norm_sq(f)) <= 1e-12


def test_analyze_grid_recovers_basis_function():
    samples = TRIG.evaluator(2, midpoint_grid(256))
    f = analyze_grid(samples, TRIG, 4)
    assert np.max(np.abs(f.coeffs - [0.0, 1.0, 0.0, 0.0])) <= 1e-6


def test_analyze_grid_constant_and_zero():
    f = analyze_grid(np.ones(64), TRIG, 3)
    assert np.allclose(f.coeffs, [1.0, 0.0, 0.0], atol=1e-12)
    z = analyze_grid(np.zeros(64), TRIG, 3)
    assert np.all(z.coeffs == 0.0) and z.tail_norm_sq == 0.0


def test_analyze_grid_rejects_coarse_grids():
    with pytest.raises(ValueError, match="N=8"):
        analyze_grid(np.zeros(8), TRIG, 3)


def test_synthesize_analyze_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        L = int(rng.integers(1, 8))
        f = FunctionVec(rng.normal(size=L))
        N = 4 * L + int(rng.integers(0, 64))
        back = analyze_grid(synthesize(f, TRIG, N), TRIG, L)
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-6
        assert back.tail_norm_sq <= 1e-6


def test_subtract_pads_and_adds_tails():
    f = FunctionVec([1.0, 2.0], tail_norm_sq=0.5)
    g = FunctionVec([0.5], tail_norm_sq=0.25)
    d = subtract(f, g)
    assert np.array_equal(d.coeffs, [0.5, 2.0])
    assert d.tail_norm_sq == 0.75


def test_coeff_matrix_truncation_moves_mass_to_tail():
    xs = [FunctionVec([1.0, 2.0, 3.0]), FunctionVec([1.0], tail_norm_sq=0.5)]
    mat, tails = coeff_matrix(xs, L=2)
    assert mat.shape == (2, 2)
    assert tails[0] == 9.0
    assert tails[1] == 0.5


def test_function_vec_validation():
    with pytest.raises(ValueError):
        FunctionVec(np.array([]))
    with pytest.raises(ValueError):
        FunctionVec([1.0], tail_norm_sq=-0.1)
    with pytest.raises(ValueError):
        FunctionVec([np.nan])
