"""Closed-form quasi-free results: z map, levels, eigenfunctions, CPT norms, confinement curves."""

import logging
import math

import numpy as np
import pytest

from src.analytic import (
    FIG1_LEVELS,
    FIG1_RATIOS,
    box_eigenfunction,
    complex_arctan,
    cpt_norm,
    density_profile,
    energy_level,
    fig1_rows,
    momentum_eigenfunction,
    momentum_norm,
    normalization_constant,
    overlap,
    position_eigenfunction,
    z_closed_form,
    z_components,
)
from src.errors import BranchCutProximity, InvalidParameter
from src.model import Contour, PhysicalConstants, QuasiFreeParams, make_quasi_free_mu, one_plus_mu
from src.quadrature import QuadratureRule

RULE = QuadratureRule()
PARAMS = QuasiFreeParams(alpha=1.0, beta=0.5)


def test_complex_arctan_matches_numpy_away_from_cuts() -> None:
    rng = np.random.default_rng(3)
    w = rng.uniform(-3.0, 3.0, 50) + 1j * rng.uniform(-0.9, 0.9, 50)
    assert np.allclose(complex_arctan(w), np.arctan(w), rtol=1e-13, atol=1e-14)


def test_complex_arctan_keeps_tiny_imaginary_parts() -> None:
    value = complex_arctan(1e6 + 0.5j)
    assert value.imag == pytest.approx(0.5e-12, rel=1e-6)


@pytest.mark.parametrize("w", [2j, -1j, 1e-10 + 3j])
def test_complex_arctan_refuses_branch_cuts(w: complex) -> None:
    with pytest.raises(BranchCutProximity):
        complex_arctan(w)


def test_z_map_is_antiderivative_of_inverse_one_plus_mu() -> None:
    mu = make_quasi_free_mu(PARAMS)
    x = np.array([-2.0, -0.3, 0.7, 3.0]) + 1j * PARAMS.contour_offset
    h = 1e-5
    numeric = (z_closed_form(PARAMS, x + h) - z_closed_form(PARAMS, x - h)) / (2.0 * h)
    assert np.allclose(numeric, 1.0 / one_plus_mu(mu, x), rtol=1e-8)


def test_z_map_on_shifted_contour_is_real_and_odd() -> None:
    xi = np.linspace(-30.0, 30.0, 61)
    z = z_closed_form(PARAMS, xi + 1j * PARAMS.contour_offset)
    assert np.max(np.abs(z.imag)) < 1e-15
    assert np.allclose(z.real, -z.real[::-1], atol=1e-15)
    assert np.all(np.abs(z.real) < 0.5 * math.pi / PARAMS.omega)


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_z_components_limits(sign: float) -> None:
    comp = z_components(PARAMS, sign * 1e6)
    assert abs(PARAMS.omega * comp.zeta - sign * 0.5 * math.pi) <= 1e-5
    assert abs(PARAMS.omega * comp.eta) <= 1e-5


def test_z_components_without_beta() -> None:
    params = QuasiFreeParams(alpha=2.0, beta=0.0)
    comp = z_components(params, 0.3)
    assert comp.zeta == pytest.approx(math.atan(0.6) / 2.0, rel=1e-14)
    assert comp.eta == 0.0
    with pytest.raises(InvalidParameter):
        z_components(params, math.inf)


@pytest.mark.parametrize(
    "alpha, beta, expected",
    [(1.0, 0.0, (0.5, 2.0, 4.5)), (1.0, 0.5, (0.625, 2.5, 5.625)), (0.5, 0.25, (0.15625, 0.625, 1.40625))],
)
def test_energy_levels(alpha: float, beta: float, expected) -> None:
    params = QuasiFreeParams(alpha, beta)
    assert [energy_level(params, n) for n in (1, 2, 3)] == pytest.approx(list(expected), rel=1e-15)


def test_energy_level_units_and_validation() -> None:
    assert energy_level(PARAMS, 1, PhysicalConstants(hbar=2.0, mass=0.5)) == pytest.approx(5.0)
    with pytest.raises(InvalidParameter):
        energy_level(PARAMS, 0)


def test_normalization_constants_coincide() -> None:
    consts = normalization_constant(PARAMS)
    assert consts.c1 == consts.c2 == pytest.approx(math.sqrt(2.0 * PARAMS.omega / math.pi))


def test_box_eigenfunction_parity() -> None:
    consts = normalization_constant(PARAMS)
    assert box_eigenfunction(PARAMS, 1, 0.0, consts) == pytest.approx(consts.c2)
    assert box_eigenfunction(PARAMS, 2, 0.0, consts) == pytest.approx(0.0)
    edge = 0.5 * math.pi / PARAMS.omega
    assert abs(box_eigenfunction(PARAMS, 1, edge, consts)) < 1e-15
    assert abs(box_eigenfunction(PARAMS, 2, edge, consts)) < 1e-15


def test_ground_state_value_at_origin() -> None:
    params = QuasiFreeParams(alpha=1.0, beta=1.0)
    value = position_eigenfunction(params, 1, 1j * params.contour_offset, normalization_constant(params))
    assert value.real == pytest.approx(2.0**0.75 / (math.sqrt(math.pi) * math.sqrt(2.0)), rel=1e-12)
    assert abs(value.imag) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cpt_norm(n: int) -> None:
    result = cpt_norm(PARAMS, n, normalization_constant(PARAMS), RULE)
    assert abs(result.value - 1.0) <= 1e-8
    assert result.cond_i <= 1e-12
    assert result.cond_ii <= 1e-12


@pytest.mark.parametrize("m, n", [(m, n) for n in range(1, 5) for m in range(1, n + 1)])
def test_eigenfunctions_are_orthonormal(m: int, n: int) -> None:
    assert abs(overlap(PARAMS, m, n, RULE) - (1.0 if m == n else 0.0)) <= 1e-8


def _sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_box_eigenfunction_has_n_minus_one_nodes(n: int) -> None:
    edge = 0.5 * math.pi / PARAMS.omega
    z = np.linspace(-edge, edge, 1002)[1:-1]
    chi = box_eigenfunction(PARAMS, n, z, normalization_constant(PARAMS))
    assert _sign_changes(chi.real) == n - 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_position_eigenfunction_has_n_minus_one_nodes(n: int) -> None:
    contour = Contour.shifted(PARAMS, 20.0, 2000)
    phi = position_eigenfunction(PARAMS, n, contour.points, normalization_constant(PARAMS))
    # 1 + mu is real and positive along the shifted contour, so phi is real there
    assert np.max(np.abs(phi.imag)) <= 1e-12 * np.max(np.abs(phi))
    assert _sign_changes(phi.real) == n - 1


def test_z_components_reconstruct_tangent() -> None:
    params = QuasiFreeParams(alpha=1.0, beta=1.0)
    comp = z_components(params, 1.0)
    tangent = np.tan(params.omega * complex(comp.zeta, comp.eta))
    assert abs(tangent - (1.0 + 1.0j) / math.sqrt(2.0)) <= 1e-10
    assert 0.0 < params.omega * comp.zeta < 0.5 * math.pi
    assert comp.eta > 0.0


@pytest.mark.parametrize("p_eig", [0.0, 1.7, -3.2])
def test_momentum_norm(p_eig: float) -> None:
    assert momentum_norm(PARAMS, p_eig, RULE) == pytest.approx(1.0, abs=1e-10)


def test_momentum_density_is_independent_of_p() -> None:
    contour = Contour.shifted(PARAMS, 10.0, 201)
    reference = np.abs(momentum_eigenfunction(PARAMS, 0.0, contour.points)) ** 2
    for p_eig in (1.7, -3.2):
        density = np.abs(momentum_eigenfunction(PARAMS, p_eig, contour.points)) ** 2
        assert np.allclose(density, reference, rtol=1e-13, atol=0.0)


@pytest.mark.parametrize("n, factor", [(1, 1.0), (2, 3.0)])
def test_density_variance(n: int, factor: float) -> None:
    profile = density_profile(PARAMS, n, np.linspace(-10.0, 10.0, 201), RULE)
    assert profile.norm == pytest.approx(1.0, abs=1e-10)
    assert profile.variance == pytest.approx(factor * PARAMS.omega**2 / PARAMS.alpha**4, rel=1e-8)
    assert profile.densities.shape == (201,)


def test_density_tail_mass_warning(caplog) -> None:
    with caplog.at_level(logging.WARNING, logger="src.analytic"):
        profile = density_profile(PARAMS, 1, np.linspace(-0.5, 0.5, 11), RULE)
    assert profile.tail_mass > 1e-3
    assert "outside the grid" in caplog.text


@pytest.fixture(scope="module")
def fig1_data():
    return fig1_rows(1.0)


def test_fig1_shape(fig1_data) -> None:
    rows, variances = fig1_data
    assert len(rows) == len(FIG1_RATIOS) * len(FIG1_LEVELS) * 401
    assert len(variances) == 8
    assert {row[2] for row in rows} == set(FIG1_RATIOS)
    assert {row[3] for row in rows} == {1.0, 2.0}


@pytest.mark.parametrize("ratio_index, expected", [(0, 2.0 / math.pi), (3, 2.0 / (math.pi * math.sqrt(2.0)))])
def test_fig1_peak(fig1_data, ratio_index: int, expected: float) -> None:
    rows, _ = fig1_data
    # curves are ordered ratio-major, then level; n = 1 comes first
    center = rows[ratio_index * len(FIG1_LEVELS) * 401 + 200]
    assert center[0] == pytest.approx(0.0, abs=1e-12)
    assert center[1] == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("n", FIG1_LEVELS)
def test_fig1_variance_increases_with_beta(fig1_data, n: int) -> None:
    _, variances = fig1_data
    series = [variances[(ratio, n)] for ratio in FIG1_RATIOS]
    assert all(b > a for a, b in zip(series, series[1:]))
