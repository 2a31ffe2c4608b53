"""Operator identities on sampled test functions: EUP commutator, PT commutation, momentum ODE."""

import json
from pathlib import Path

import numpy as np
import pytest

from src.analytic import energy_level, momentum_eigenfunction, normalization_constant, position_eigenfunction
from src.errors import ContourNotReflectionInvariant, InvalidParameter
from src.model import ComplexPolynomial, Contour, PhysicalConstants, QuasiFreeParams, make_quasi_free_mu
from src.operators import (
    PotentialSpec,
    StencilScheme,
    WavefunctionTable,
    apply_hamiltonian,
    apply_momentum,
    commutator_residual,
    momentum_ode_residual,
    momentum_pt_residual,
    pt_image,
    pt_symmetry_residual,
    read_wavefunction_csv,
    stencil_derivatives,
    write_wavefunction_csv,
)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
EXPECTED_LEVELS_PATH = PROJECT_ROOT / "expected_levels.json"

C = PhysicalConstants()
SCHEME = StencilScheme(order=4, richardson=True)
REAL_AXIS = Contour.real_axis(8.0, 1601)


def _parameter_sets() -> list[QuasiFreeParams]:
    with open(EXPECTED_LEVELS_PATH, encoding="utf-8") as f:
        data = json.load(f)
    return [QuasiFreeParams(entry["alpha"], entry["beta"]) for entry in data.values()]


def _gaussian(contour: Contour) -> WavefunctionTable:
    x = contour.points
    return WavefunctionTable(contour, np.exp(-0.5 * x * x), "gaussian")


def _gaussian_poly(contour: Contour) -> WavefunctionTable:
    x = contour.points
    return WavefunctionTable(contour, (1.0 + 0.5j * x - 0.25 * x * x) * np.exp(-0.5 * x * x), "gaussian_poly")


@pytest.mark.parametrize("params", _parameter_sets())
@pytest.mark.parametrize("make_table", [_gaussian, _gaussian_poly])
def test_commutator_identity(params: QuasiFreeParams, make_table) -> None:
    residual = commutator_residual(make_quasi_free_mu(params), make_table(REAL_AXIS), C, SCHEME)
    assert residual <= 1e-9


@pytest.mark.parametrize("params", _parameter_sets())
def test_hamiltonian_commutes_with_pt(params: QuasiFreeParams) -> None:
    mu = make_quasi_free_mu(params)
    f = _gaussian_poly(REAL_AXIS)
    assert pt_symmetry_residual(mu, PotentialSpec.zero(), f, C, SCHEME) <= 1e-9
    assert momentum_pt_residual(mu, f, C, SCHEME) <= 1e-9


def test_pt_commutation_with_cubic_potential() -> None:
    mu = ComplexPolynomial((0.0, 0.4j, 0.3))
    V = PotentialSpec.polynomial(ComplexPolynomial((0.0, 0.0, 0.0, 1j)))
    assert pt_symmetry_residual(mu, V, _gaussian_poly(REAL_AXIS), C, SCHEME) <= 1e-9


def test_pt_commutation_fails_for_control_mu() -> None:
    # 1600 points keep every node away from the zero of 1 + x at x = -1
    contour = Contour.real_axis(8.0, 1600)
    mu = ComplexPolynomial((0.0, 1.0))
    assert pt_symmetry_residual(mu, PotentialSpec.zero(), _gaussian(contour), C, SCHEME) >= 1e-3


def test_pt_image_needs_reflection_invariant_contour() -> None:
    shifted = Contour.shifted(QuasiFreeParams(1.0, 0.5), 5.0, 101)
    with pytest.raises(ContourNotReflectionInvariant):
        pt_image(_gaussian(shifted))


def test_pt_image_values() -> None:
    contour = Contour.real_axis(1.0, 5)
    f = WavefunctionTable(contour, np.array([1, 2j, 3, 4 + 1j, 5]), "f")
    assert np.array_equal(pt_image(f).values, [5, 4 - 1j, 3, -2j, 1])


def test_momentum_of_plane_wave() -> None:
    contour = Contour.real_axis(5.0, 501)
    k = 1.3
    f = WavefunctionTable(contour, np.exp(1j * k * contour.points), "plane")
    pf = apply_momentum(ComplexPolynomial(), f, C, SCHEME)
    assert pf.trim == SCHEME.trim
    inner = pf.interior
    assert np.allclose(pf.values[inner], k * f.values[inner], rtol=0.0, atol=1e-8)
    assert np.all(pf.values[: pf.trim] == 0)


def test_hamiltonian_of_oscillator_ground_state() -> None:
    # mu = 0, V = x^2/2: the Gaussian is an eigenfunction with E = 1/2
    contour = Contour.real_axis(8.0, 801)
    V = PotentialSpec.polynomial(ComplexPolynomial((0.0, 0.0, 0.5)))
    f = _gaussian(contour)
    hf = apply_hamiltonian(ComplexPolynomial(), V, f, C, SCHEME)
    inner = hf.interior
    assert np.allclose(hf.values[inner], 0.5 * f.values[inner], rtol=0.0, atol=1e-8)


def _bump(contour: Contour) -> tuple[WavefunctionTable, np.ndarray]:
    # g = (1 + ix/2) exp(-x^2/2), g'' = (x^2 - 1 - 3ix/2 + ix^3/2) exp(-x^2/2)
    x = contour.points
    envelope = np.exp(-0.5 * x * x)
    g = WavefunctionTable(contour, (1.0 + 0.5j * x) * envelope, "bump")
    return g, (x * x - 1.0 - 1.5j * x + 0.5j * x**3) * envelope


@pytest.mark.parametrize("order", [2, 4])
def test_stencil_convergence_order(order: int) -> None:
    scheme = StencilScheme(order=order, richardson=False)
    errors = []
    for n_points in (241, 481, 961):
        g, exact = _bump(Contour.real_axis(6.0, n_points))
        _d1, d2, trim = stencil_derivatives(g, scheme)
        inner = slice(trim, n_points - trim)
        errors.append(np.max(np.abs(d2[inner] - exact[inner])))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert rates.tolist() == pytest.approx([order, order], abs=0.15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hamiltonian_reproduces_closed_form_levels(n: int) -> None:
    params = QuasiFreeParams(1.0, 0.5)
    contour = Contour.shifted(params, 20.0, 4001)
    consts = normalization_constant(params)
    phi = WavefunctionTable.sample(contour, lambda x: position_eigenfunction(params, n, x, consts), f"phi_{n}")
    h_phi = apply_hamiltonian(make_quasi_free_mu(params), PotentialSpec.zero(), phi, C, SCHEME)
    inner = h_phi.interior
    residual = h_phi.values[inner] - energy_level(params, n, C) * phi.values[inner]
    assert np.max(np.abs(residual)) <= 1e-6 * np.max(np.abs(phi.values))


def test_hamiltonian_is_linear() -> None:
    mu = make_quasi_free_mu(QuasiFreeParams(1.0, 0.5))
    V = PotentialSpec.polynomial(ComplexPolynomial((0.0, 0.0, 0.5)))
    f, g = _gaussian(REAL_AXIS), _gaussian_poly(REAL_AXIS)
    a, b = 0.7 - 1.2j, 2.5 + 0.3j
    combined = apply_hamiltonian(mu, V, f.with_values(a * f.values + b * g.values), C, SCHEME)
    separate = a * apply_hamiltonian(mu, V, f, C, SCHEME).values + b * apply_hamiltonian(mu, V, g, C, SCHEME).values
    inner = combined.interior
    assert np.allclose(combined.values[inner], separate[inner], rtol=1e-12, atol=1e-10)


@pytest.mark.parametrize("p_eig", [0.0, 1.7, -3.2])
def test_momentum_eigenfunction_solves_ode(p_eig: float) -> None:
    params = QuasiFreeParams(1.0, 0.5)
    contour = Contour.shifted(params, 20.0, 4001)
    phi = WavefunctionTable.sample(contour, lambda x: momentum_eigenfunction(params, p_eig, x, C), "Phi")
    assert momentum_ode_residual(params, p_eig, phi, SCHEME, C) <= 1e-8
    assert momentum_ode_residual(params, p_eig + 1.0, phi, SCHEME, C) >= 1e-3


def test_stencil_needs_enough_points() -> None:
    contour = Contour.real_axis(1.0, 7)
    with pytest.raises(InvalidParameter):
        stencil_derivatives(_gaussian(contour), SCHEME)


def test_table_validation() -> None:
    contour = Contour.real_axis(1.0, 5)
    with pytest.raises(InvalidParameter):
        WavefunctionTable(contour, np.ones(4))
    with pytest.raises(InvalidParameter):
        WavefunctionTable(contour, np.array([1.0, np.nan, 1.0, 1.0, 1.0]))


def test_wavefunction_csv_reload(tmp_path: Path) -> None:
    params = QuasiFreeParams(1.0, 0.5)
    contour = Contour.shifted(params, 6.0, 61)
    f = WavefunctionTable.sample(contour, lambda x: momentum_eigenfunction(params, 1.7, x), "Phi")
    path = tmp_path / "phi.csv"
    write_wavefunction_csv(f, path)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "re_x,im_x,re_f,im_f"
    loaded = read_wavefunction_csv(path)
    assert loaded.contour.n_points == 61
    assert loaded.contour.offset_b == pytest.approx(params.contour_offset)
    assert np.array_equal(loaded.values, f.values)
    assert loaded.label == "phi"
