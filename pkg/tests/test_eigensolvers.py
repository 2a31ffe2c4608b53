"""Oracle tests for the compiled eigenvalue kernels."""

import math

import numpy as np
import pytest
from scipy import linalg

from src.eigensolvers import (
    DenseComplexMatrix,
    SymTridiagMatrix,
    eig_dense_complex,
    eig_sym_tridiag,
    eig_sym_tridiag_lowest,
    sort_spectrum,
)
from src.errors import InvalidParameter, NoConvergence

LAPLACIAN_3 = SymTridiagMatrix(np.array([2.0, 2.0, 2.0]), np.array([-1.0, -1.0]))
LAPLACIAN_3_EIGS = np.array([2.0 - math.sqrt(2.0), 2.0, 2.0 + math.sqrt(2.0)])


def _random_tridiagonal(n: int, seed: int) -> SymTridiagMatrix:
    rng = np.random.default_rng(seed)
    return SymTridiagMatrix(rng.standard_normal(n), rng.standard_normal(n - 1))


def _random_complex(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def test_laplacian_spectrum_ql() -> None:
    assert np.allclose(eig_sym_tridiag(LAPLACIAN_3), LAPLACIAN_3_EIGS, rtol=0.0, atol=1e-12)


def test_laplacian_spectrum_bisection() -> None:
    assert np.allclose(eig_sym_tridiag_lowest(LAPLACIAN_3, 3), LAPLACIAN_3_EIGS, rtol=0.0, atol=1e-12)


def test_laplacian_spectrum_dense() -> None:
    values = eig_dense_complex(DenseComplexMatrix(LAPLACIAN_3.to_dense()))
    assert np.allclose(values, LAPLACIAN_3_EIGS, rtol=0.0, atol=1e-12)


@pytest.mark.parametrize("n, seed", [(1, 0), (2, 1), (10, 2), (120, 3)])
def test_ql_matches_reference(n: int, seed: int) -> None:
    m = _random_tridiagonal(n, seed) if n > 1 else SymTridiagMatrix(np.array([3.5]), np.array([]))
    expected = np.linalg.eigvalsh(m.to_dense())
    assert np.allclose(eig_sym_tridiag(m), expected, rtol=0.0, atol=1e-11 * max(1.0, m.scale))


def test_bisection_lowest_levels_match_ql() -> None:
    m = _random_tridiagonal(200, 7)
    full = eig_sym_tridiag(m)
    assert np.allclose(eig_sym_tridiag_lowest(m, 5), full[:5], rtol=0.0, atol=1e-12 * m.scale)


def test_bisection_on_graded_matrix() -> None:
    # Diagonal grows like j^4 (as 1+mu does on a long contour); the smallest level is O(1)
    n = 400
    j = np.arange(1, n + 1, dtype=np.float64)
    diag = 2.0 + (j / 10.0) ** 4
    off = -np.ones(n - 1)
    m = SymTridiagMatrix(diag, off)
    expected = linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 2))
    assert np.allclose(eig_sym_tridiag_lowest(m, 3), expected, rtol=1e-8, atol=0.0)


@pytest.mark.parametrize("n, seed", [(6, 11), (8, 12)])
def test_dense_trace_and_determinant(n: int, seed: int) -> None:
    a = _random_complex(n, seed)
    values = eig_dense_complex(DenseComplexMatrix(a))
    trace = np.trace(a)
    det = linalg.det(a)
    assert abs(np.sum(values) - trace) <= 1e-8 * max(1.0, abs(trace))
    assert abs(np.prod(values) - det) <= 1e-8 * abs(det)


def test_dense_hermitian_matrix_has_real_spectrum() -> None:
    a = _random_complex(12, 5)
    h = a + a.conj().T
    values = eig_dense_complex(DenseComplexMatrix(h))
    assert np.max(np.abs(values.imag)) < 1e-12 * np.max(np.abs(values))
    assert np.allclose(np.sort(values.real), np.linalg.eigvalsh(h), atol=1e-11)


@pytest.mark.parametrize("n, seed", [(6, 21), (9, 22), (16, 23)])
def test_dense_pt_symmetric_matrix_has_conjugate_pairs(n: int, seed: int) -> None:
    # P conj(M) P = M with P the index reversal
    a = _random_complex(n, seed)
    m = a + np.conj(a[::-1, ::-1])
    values = eig_dense_complex(DenseComplexMatrix(m))
    scale = np.max(np.abs(values))
    for value in values:
        assert np.min(np.abs(values - np.conj(value))) <= 1e-9 * scale


def test_sort_spectrum_orders_by_real_then_imaginary() -> None:
    values = np.array([2.0 + 1j, 1.0 - 1j, 2.0 - 1j, 1.0 + 1j])
    assert list(sort_spectrum(values)) == [1.0 - 1j, 1.0 + 1j, 2.0 - 1j, 2.0 + 1j]


def test_zero_matrix() -> None:
    assert np.array_equal(eig_dense_complex(DenseComplexMatrix(np.zeros((3, 3)))), np.zeros(3))


def test_no_convergence_is_reported() -> None:
    with pytest.raises(NoConvergence):
        eig_dense_complex(DenseComplexMatrix(_random_complex(6, 0)), max_iter=0)
    with pytest.raises(NoConvergence):
        eig_sym_tridiag(LAPLACIAN_3, max_iter=0)


def test_invalid_inputs() -> None:
    with pytest.raises(InvalidParameter):
        SymTridiagMatrix(np.ones(3), np.ones(3))
    with pytest.raises(InvalidParameter):
        DenseComplexMatrix(np.ones((2, 3)))
    with pytest.raises(InvalidParameter):
        eig_sym_tridiag_lowest(LAPLACIAN_3, 0)
    with pytest.raises(InvalidParameter):
        eig_sym_tridiag_lowest(LAPLACIAN_3, 4)
