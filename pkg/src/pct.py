"""Point canonical transformation z = integral dx/(1+mu): numeric map, wavefunction (de)composition, z-space checks."""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from src.analytic import energy_level, z_closed_form
from src.errors import InvalidParameter
from src.model import (
    ComplexPolynomial,
    Contour,
    PhysicalConstants,
    QuasiFreeParams,
    make_quasi_free_mu,
    one_plus_mu,
)
from src.operators import PotentialSpec, WavefunctionTable
from src.quadrature import QuadratureRule, quadrature_infinite, quadrature_segments
from src.spectral import solve_bound_states

logger = logging.getLogger(__name__)

PCT_CSV_COLUMNS = ["re_x", "im_x", "re_z", "im_z"]


@dataclass(frozen=True)
class PCTMap:
    """z_j = z(x_j) on a contour; z0 is the value at the contour midpoint (xi = 0)."""

    contour: Contour
    z_values: np.ndarray
    z0: complex = 0j

    def __post_init__(self) -> None:
        z = np.asarray(self.z_values, dtype=np.complex128)
        if z.shape != (self.contour.n_points,):
            raise InvalidParameter(f"z map has {z.size} values for a {self.contour.n_points}-point contour")
        object.__setattr__(self, "z_values", z)

    def shifted(self, delta: complex) -> "PCTMap":
        """The same map in another gauge, z0 -> z0 + delta."""
        return PCTMap(self.contour, self.z_values + delta, self.z0 + delta)


@dataclass
class InvarianceReport:
    """x-space eigenvalues vs the z-space box spectrum n^2 pi^2 hbar^2 / (2 m W^2)."""

    box_width: float
    accuracy: float
    levels: list[dict[str, Any]] = field(default_factory=list)
    passed: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "box_width": self.box_width,
            "accuracy": self.accuracy,
            "levels": self.levels,
            "passed": self.passed,
        }


def numeric_z_map(mu: ComplexPolynomial, contour: Contour, z0: complex, rule: QuadratureRule) -> PCTMap:
    """Cumulative quadrature of 1/(1+mu) along the contour, anchored at xi = 0 with value z0."""
    one_plus_mu(mu, contour.points)
    offset = contour.offset_b

    def inverse(xi: np.ndarray) -> np.ndarray:
        return 1.0 / one_plus_mu(mu, xi + 1j * offset)

    xi = contour.xi
    edges = np.union1d(xi, [0.0])
    segments = quadrature_segments(inverse, edges[:-1], edges[1:], rule)
    cumulative = np.concatenate([[0.0 + 0.0j], np.cumsum(segments)])
    anchor = int(np.searchsorted(edges, 0.0))
    z_edges = z0 + (cumulative - cumulative[anchor])
    logger.debug("z map over %d segments, anchor index %d", segments.size, anchor)
    return PCTMap(contour, z_edges[np.searchsorted(edges, xi)], complex(z0))


def closed_form_gauge(params: QuasiFreeParams, contour: Contour) -> complex:
    """z0 that makes numeric_z_map agree with the closed form at xi = 0."""
    return complex(z_closed_form(params, 1j * contour.offset_b))


def continuous_sqrt(values: np.ndarray) -> np.ndarray:
    """Square root continued along the array from the principal root at its middle."""
    values = np.asarray(values, dtype=np.complex128)
    roots = np.sqrt(values)
    mid = values.size // 2
    for j in range(mid + 1, values.size):
        if abs(roots[j] - roots[j - 1]) > abs(roots[j] + roots[j - 1]):
            roots[j] = -roots[j]
    for j in range(mid - 1, -1, -1):
        if abs(roots[j] - roots[j + 1]) > abs(roots[j] + roots[j + 1]):
            roots[j] = -roots[j]
    return roots


def _check_same_contour(table: WavefunctionTable, pct_map: PCTMap) -> None:
    if table.contour != pct_map.contour:
        raise InvalidParameter("wavefunction and z map live on different contours")


def decompose_wavefunction(mu: ComplexPolynomial, phi: WavefunctionTable, pct_map: PCTMap) -> WavefunctionTable:
    """chi_j = phi_j sqrt(1 + mu(x_j)), tagged with the z nodes."""
    _check_same_contour(phi, pct_map)
    root = continuous_sqrt(one_plus_mu(mu, phi.contour.points))
    return WavefunctionTable(phi.contour, phi.values * root, f"chi[{phi.label}]", phi.trim, pct_map.z_values)


def recompose_wavefunction(mu: ComplexPolynomial, chi: WavefunctionTable, pct_map: PCTMap) -> WavefunctionTable:
    """phi_j = chi_j / sqrt(1 + mu(x_j)), the inverse of decompose_wavefunction."""
    _check_same_contour(chi, pct_map)
    root = continuous_sqrt(one_plus_mu(mu, chi.contour.points))
    return WavefunctionTable(chi.contour, chi.values / root, f"phi[{chi.label}]", chi.trim)


def zspace_residual(chi_on_z: WavefunctionTable, E: float, V: PotentialSpec, c: PhysicalConstants) -> float:
    """Sup-norm of -(hbar^2/2m) chi'' + (V - E) chi on interior z nodes, three-point unequal spacing."""
    if chi_on_z.z_nodes is None:
        raise InvalidParameter("table carries no z nodes; decompose it first")
    z = chi_on_z.z_nodes
    chi = chi_on_z.values
    h1 = z[1:-1] - z[:-2]
    h2 = z[2:] - z[1:-1]
    second = 2.0 * (h1 * chi[2:] - (h1 + h2) * chi[1:-1] + h2 * chi[:-2]) / (h1 * h2 * (h1 + h2))
    residual = -c.kinetic * second - E * chi[1:-1]
    if not V.is_zero:
        residual = residual + V.evaluate(chi_on_z.contour.points[1:-1]) * chi[1:-1]
    lo = chi_on_z.trim
    hi = residual.size - lo
    return float(np.max(np.abs(residual[lo:hi]))) / (1.0 + float(np.max(np.abs(chi))))


def zspace_box_width(mu: ComplexPolynomial, offset_b: float, rule: QuadratureRule) -> complex:
    """W = integral over the whole line Im(x) = offset_b of dx / (1 + mu)."""
    if mu.degree < 2:
        raise InvalidParameter("the z-space box is finite only for deg(mu) >= 2")
    scale = abs(mu.coeffs[-1]) ** (-1.0 / mu.degree)

    def inverse(xi: np.ndarray) -> np.ndarray:
        return 1.0 / one_plus_mu(mu, xi + 1j * offset_b)

    return quadrature_infinite(inverse, rule, scale=scale)


def energy_invariance_check(
    params: QuasiFreeParams,
    n_levels: int,
    c: PhysicalConstants,
    accuracy: float,
    rule: Optional[QuadratureRule] = None,
    **solver_options: Any,
) -> InvarianceReport:
    """
    Compare shifted-contour eigenvalues (two-grid extrapolated) with the z-space box levels.

    PASS iff every relative deviation is strictly below accuracy.
    """
    if n_levels < 1:
        raise InvalidParameter(f"n_levels must be >= 1, got {n_levels}")
    if accuracy < 0:
        raise InvalidParameter(f"accuracy must be non-negative, got {accuracy}")
    rule = rule or QuadratureRule()
    mu = make_quasi_free_mu(params)
    width = zspace_box_width(mu, params.contour_offset, rule)
    if abs(width.imag) > 1e-10 * abs(width):
        logger.warning("box width %s is not real on the shifted contour", width)
    box_width = width.real
    solution = solve_bound_states(
        mu, PotentialSpec.zero(), c, "shifted", n_levels, accuracy_target=max(accuracy, 1e-300), **solver_options
    )
    report = solution.report
    x_space = report.extrapolated if report.extrapolated is not None else report.eigenvalues
    result = InvarianceReport(box_width=box_width, accuracy=accuracy)
    for n, value in enumerate(x_space, start=1):
        z_level = n * n * c.kinetic * math.pi**2 / box_width**2
        deviation = abs(complex(value) - z_level) / z_level
        result.levels.append(
            {
                "n": n,
                "x_space": complex(value).real,
                "z_space": z_level,
                "closed_form": energy_level(params, n, c),
                "deviation": deviation,
            }
        )
    result.passed = bool(result.levels) and all(level["deviation"] < accuracy for level in result.levels)
    logger.info("Energy invariance: %s (max deviation %.3e)", "PASS" if result.passed else "FAIL",
                max(level["deviation"] for level in result.levels))
    return result


def write_pct_map_csv(pct_map: PCTMap, output_path: Path) -> None:
    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PCT_CSV_COLUMNS)
        for xj, zj in zip(pct_map.contour.points, pct_map.z_values):
            w.writerow([f"{xj.real:.17g}", f"{xj.imag:.17g}", f"{zj.real:.17g}", f"{zj.imag:.17g}"])
