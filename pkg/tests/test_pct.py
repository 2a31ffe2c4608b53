"""Point canonical transformation: numeric z map, (de)composition, z-space equation, energy invariance."""

import math
from pathlib import Path

import numpy as np
import pytest

from src.analytic import box_eigenfunction, energy_level, normalization_constant, position_eigenfunction, z_closed_form
from src.errors import InvalidParameter
from src.model import ComplexPolynomial, Contour, PhysicalConstants, QuasiFreeParams, make_quasi_free_mu
from src.operators import PotentialSpec, WavefunctionTable
from src.pct import (
    PCTMap,
    closed_form_gauge,
    continuous_sqrt,
    decompose_wavefunction,
    energy_invariance_check,
    numeric_z_map,
    recompose_wavefunction,
    write_pct_map_csv,
    zspace_box_width,
    zspace_residual,
)
from src.quadrature import QuadratureRule

C = PhysicalConstants()
RULE = QuadratureRule()


def _setup(params: QuasiFreeParams, n_points: int = 4001):
    mu = make_quasi_free_mu(params)
    contour = Contour.shifted(params, 20.0 / params.alpha, n_points)
    pct_map = numeric_z_map(mu, contour, closed_form_gauge(params, contour), RULE)
    return mu, contour, pct_map


@pytest.mark.parametrize("alpha, beta", [(1.0, 0.5), (1.0, 1.0), (0.5, 0.25)])
def test_numeric_z_map_matches_closed_form(alpha: float, beta: float) -> None:
    params = QuasiFreeParams(alpha, beta)
    _mu, contour, pct_map = _setup(params)
    exact = z_closed_form(params, contour.points)
    assert np.max(np.abs(pct_map.z_values - exact)) <= 1e-10


def test_z_map_gauge_shift() -> None:
    params = QuasiFreeParams(1.0, 0.5)
    mu = make_quasi_free_mu(params)
    contour = Contour.shifted(params, 5.0, 101)
    base = numeric_z_map(mu, contour, 0j, RULE)
    moved = base.shifted(0.25 + 0.5j)
    assert moved.z0 == 0.25 + 0.5j
    assert np.allclose(moved.z_values - base.z_values, 0.25 + 0.5j, rtol=0.0, atol=1e-15)
    assert base.z_values[50] == 0j
    with pytest.raises(InvalidParameter):
        PCTMap(contour, np.zeros(10))


def test_continuous_sqrt_follows_the_path() -> None:
    theta = np.linspace(-3.5, 3.5, 141)
    roots = continuous_sqrt(np.exp(1j * theta))
    assert np.allclose(roots, np.exp(0.5j * theta), atol=1e-14)


@pytest.mark.parametrize("n", [1, 2])
def test_decompose_and_recompose(n: int) -> None:
    params = QuasiFreeParams(1.0, 0.5)
    mu, contour, pct_map = _setup(params)
    consts = normalization_constant(params)
    phi = WavefunctionTable.sample(contour, lambda x: position_eigenfunction(params, n, x, consts), f"phi_{n}")
    chi = decompose_wavefunction(mu, phi, pct_map)
    expected = box_eigenfunction(params, n, z_closed_form(params, contour.points), consts)
    assert np.max(np.abs(chi.values - expected)) <= 1e-10
    assert np.array_equal(chi.z_nodes, pct_map.z_values)
    back = recompose_wavefunction(mu, chi, pct_map)
    assert np.max(np.abs(back.values - phi.values)) <= 1e-12 * (1.0 + np.max(np.abs(phi.values)))


def test_decompose_rejects_other_contour() -> None:
    params = QuasiFreeParams(1.0, 0.5)
    mu, _contour, pct_map = _setup(params, n_points=101)
    other = Contour.shifted(params, 20.0, 201)
    with pytest.raises(InvalidParameter):
        decompose_wavefunction(mu, WavefunctionTable(other, np.ones(201)), pct_map)


@pytest.mark.parametrize("n", [1, 2])
def test_zspace_residual(n: int) -> None:
    params = QuasiFreeParams(1.0, 0.5)
    mu, contour, pct_map = _setup(params)
    consts = normalization_constant(params)
    phi = WavefunctionTable.sample(contour, lambda x: position_eigenfunction(params, n, x, consts), f"phi_{n}")
    chi = decompose_wavefunction(mu, phi, pct_map)
    E = energy_level(params, n, C)
    assert zspace_residual(chi, E, PotentialSpec.zero(), C) <= 1e-3
    assert zspace_residual(chi, E + 0.5, PotentialSpec.zero(), C) >= 1e-2
    with pytest.raises(InvalidParameter):
        zspace_residual(phi, E, PotentialSpec.zero(), C)


@pytest.mark.parametrize("alpha, beta", [(1.0, 0.0), (1.0, 0.5), (0.5, 0.25)])
def test_box_width(alpha: float, beta: float) -> None:
    params = QuasiFreeParams(alpha, beta)
    width = zspace_box_width(make_quasi_free_mu(params), params.contour_offset, RULE)
    assert width.real == pytest.approx(math.pi / params.omega, rel=1e-12)
    assert abs(width.imag) <= 1e-12


def test_box_width_needs_quadratic_mu() -> None:
    with pytest.raises(InvalidParameter):
        zspace_box_width(ComplexPolynomial((0.0, 1j)), 0.0, RULE)


def test_energy_invariance() -> None:
    params = QuasiFreeParams(1.0, 0.5)
    report = energy_invariance_check(params, 3, C, 1e-3, with_vectors=False)
    assert report.passed
    assert report.box_width == pytest.approx(math.pi / params.omega, rel=1e-12)
    assert [level["n"] for level in report.levels] == [1, 2, 3]
    for level in report.levels:
        assert level["z_space"] == pytest.approx(level["closed_form"], rel=1e-12)
        assert level["deviation"] < 1e-3


def test_energy_invariance_is_strict() -> None:
    params = QuasiFreeParams(1.0, 0.0)
    report = energy_invariance_check(params, 1, C, 0.0, with_vectors=False, n_points=401)
    assert not report.passed
    with pytest.raises(InvalidParameter):
        energy_invariance_check(params, 0, C, 1e-3)


def test_pct_map_csv(tmp_path: Path) -> None:
    params = QuasiFreeParams(1.0, 0.5)
    _mu, contour, pct_map = _setup(params, n_points=21)
    path = tmp_path / "pct_map.csv"
    write_pct_map_csv(pct_map, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "re_x,im_x,re_z,im_z"
    assert len(lines) == 22
