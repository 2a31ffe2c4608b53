"""Closed forms for the quasi-free particle, mu(x) = alpha^2 x^2 + 2i beta x."""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from src.errors import BranchCutProximity, EupSpectraError, InvalidParameter
from src.model import PhysicalConstants, QuasiFreeParams, make_quasi_free_mu, one_plus_mu, principal_sqrt
from src.quadrature import QuadratureRule, quadrature, quadrature_infinite

logger = logging.getLogger(__name__)

BRANCH_CUT_TOL = 1e-8

# fig1 defaults: beta/alpha values of the published curves, and the two levels shown
FIG1_RATIOS = (0.0, 0.25, 0.5, 1.0)
FIG1_LEVELS = (1, 2)


@dataclass(frozen=True)
class ZComponents:
    zeta: float
    eta: float


@dataclass(frozen=True)
class NormalizationConstants:
    c1: float
    c2: float


class CPTNorm(NamedTuple):
    value: complex
    cond_i: float
    cond_ii: float


class DensityProfile(NamedTuple):
    densities: np.ndarray
    variance: float
    norm: float
    tail_mass: float


def complex_arctan(w):
    """
    Principal arctan via the log formula, split into real and imaginary parts.

    The imaginary part uses log1p so it keeps relative accuracy when it is tiny.
    Raises BranchCutProximity within BRANCH_CUT_TOL of the cuts +-i[1, inf).
    """
    w = np.asarray(w, dtype=np.complex128)
    a, b = w.real, w.imag
    near_cut = (np.abs(a) < BRANCH_CUT_TOL) & (np.abs(b) >= 1.0 - BRANCH_CUT_TOL)
    if np.any(near_cut):
        raise BranchCutProximity(f"arctan argument within {BRANCH_CUT_TOL:g} of a branch cut")
    real = 0.5 * (np.arctan2(a, 1.0 + b) + np.arctan2(a, 1.0 - b))
    imag = 0.25 * np.log1p(4.0 * b / ((1.0 - b) ** 2 + a * a))
    return (real + 1j * imag)[()]


def z_closed_form(params: QuasiFreeParams, x):
    """z(x) = arctan((alpha^2 x + i beta) / omega) / omega."""
    w = (params.alpha**2 * np.asarray(x, dtype=np.complex128) + 1j * params.beta) / params.omega
    return complex_arctan(w) / params.omega


def z_components(params: QuasiFreeParams, x: float) -> ZComponents:
    """(zeta, eta) of z(x) for real x, checked against tan(omega (zeta + i eta)) = (alpha^2 x + i beta)/omega."""
    if not math.isfinite(x):
        raise InvalidParameter(f"x must be finite, got {x}")
    z = complex(z_closed_form(params, float(x)))
    omega = params.omega
    u, v = omega * z.real, omega * z.imag
    if abs(u) > 0.5 * math.pi * (1.0 + 1e-15):
        raise EupSpectraError(f"omega*zeta = {u} outside [-pi/2, pi/2]")
    den = math.cos(u) ** 2 * math.cosh(v) ** 2 + math.sin(u) ** 2 * math.sinh(v) ** 2
    real_part = math.sin(u) * math.cos(u) / den
    imag_part = math.sinh(v) * math.cosh(v) / den
    expected = params.alpha**2 * x / omega
    tol = 1e-10 * (1.0 + expected * expected)
    if abs(real_part - expected) > tol or abs(imag_part - params.beta / omega) > tol:
        raise EupSpectraError(
            f"z({x}) does not reconstruct ({expected}, {params.beta / omega}): got ({real_part}, {imag_part})"
        )
    return ZComponents(z.real, z.imag)


def energy_level(params: QuasiFreeParams, n: int, c: PhysicalConstants = PhysicalConstants()) -> float:
    """E_n = n^2 hbar^2 (alpha^2 + beta^2) / 2m."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    return n * n * c.kinetic * params.omega**2


def normalization_constant(params: QuasiFreeParams) -> NormalizationConstants:
    value = math.sqrt(2.0 * params.omega / math.pi)
    return NormalizationConstants(value, value)


def box_eigenfunction(params: QuasiFreeParams, n: int, z, consts: NormalizationConstants):
    """chi_n(z): C2 cos(n omega z) for odd n, C1 sin(n omega z) for even n."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    arg = n * params.omega * np.asarray(z, dtype=np.complex128)
    if n % 2:
        return (consts.c2 * np.cos(arg))[()]
    return (consts.c1 * np.sin(arg))[()]


def position_eigenfunction(params: QuasiFreeParams, n: int, x, consts: NormalizationConstants):
    """phi_n(x) = chi_n(z(x)) / sqrt(1 + mu(x)), principal root."""
    x = np.asarray(x, dtype=np.complex128)
    root = principal_sqrt(np.atleast_1d(one_plus_mu(make_quasi_free_mu(params), np.atleast_1d(x))))
    chi = np.atleast_1d(box_eigenfunction(params, n, z_closed_form(params, x), consts))
    return (chi / root).reshape(x.shape)[()]


def momentum_eigenfunction(params: QuasiFreeParams, p_eig: float, x, c: PhysicalConstants = PhysicalConstants()):
    """Phi_p(x) = sqrt(omega/pi) (1+mu)^(-1/2) exp(-i p z(x) / hbar)."""
    x = np.asarray(x, dtype=np.complex128)
    root = principal_sqrt(np.atleast_1d(one_plus_mu(make_quasi_free_mu(params), np.atleast_1d(x))))
    phase = np.exp(-1j * p_eig * np.atleast_1d(z_closed_form(params, x)) / c.hbar)
    return (math.sqrt(params.omega / math.pi) * phase / root).reshape(x.shape)[()]


def _on_shifted_contour(params: QuasiFreeParams, xi: np.ndarray) -> np.ndarray:
    return np.asarray(xi, dtype=np.float64) + 1j * params.contour_offset


def cpt_norm(params: QuasiFreeParams, n: int, consts: NormalizationConstants, rule: QuadratureRule) -> CPTNorm:
    """
    Integral of phi_n^2 along Im(x) = -beta/alpha^2.

    cond_i is sup|Im phi_n^2| and cond_ii is -min(0, inf Re phi_n^2), both over every quadrature node visited.
    """
    worst = {"imag": 0.0, "negative": 0.0}

    def integrand(xi: np.ndarray) -> np.ndarray:
        sq = np.atleast_1d(position_eigenfunction(params, n, _on_shifted_contour(params, xi), consts)) ** 2
        worst["imag"] = max(worst["imag"], float(np.max(np.abs(sq.imag))))
        worst["negative"] = max(worst["negative"], float(-min(0.0, np.min(sq.real))))
        return sq

    value = quadrature_infinite(integrand, rule, scale=1.0 / params.alpha)
    return CPTNorm(value, worst["imag"], worst["negative"])


def overlap(params: QuasiFreeParams, m: int, n: int, rule: QuadratureRule) -> complex:
    """Bilinear overlap of phi_m and phi_n on the shifted contour."""
    consts = normalization_constant(params)

    def integrand(xi: np.ndarray) -> np.ndarray:
        x = _on_shifted_contour(params, xi)
        return np.atleast_1d(position_eigenfunction(params, m, x, consts)) * np.atleast_1d(
            position_eigenfunction(params, n, x, consts)
        )

    return quadrature_infinite(integrand, rule, scale=1.0 / params.alpha)


def momentum_norm(params: QuasiFreeParams, p_eig: float, rule: QuadratureRule, c: PhysicalConstants = PhysicalConstants()) -> float:
    """Integral of |Phi_p|^2 over the shifted contour."""

    def integrand(xi: np.ndarray) -> np.ndarray:
        return np.abs(np.atleast_1d(momentum_eigenfunction(params, p_eig, _on_shifted_contour(params, xi), c))) ** 2

    return quadrature_infinite(integrand, rule, scale=1.0 / params.alpha).real


def density_profile(
    params: QuasiFreeParams,
    n: int,
    xi_grid: Sequence[float],
    rule: QuadratureRule = QuadratureRule(),
    tail_tol: float = 1e-3,
) -> DensityProfile:
    """|phi_n(xi)|^2 on the grid, normalized; variance = integral of xi^2 |phi_n|^2 (mean 0 by symmetry)."""
    xi_grid = np.asarray(xi_grid, dtype=np.float64)
    if xi_grid.ndim != 1 or xi_grid.size < 2:
        raise InvalidParameter("xi_grid must be a vector of at least 2 points")
    consts = normalization_constant(params)

    def density(xi: np.ndarray) -> np.ndarray:
        return np.abs(np.atleast_1d(position_eigenfunction(params, n, _on_shifted_contour(params, xi), consts))) ** 2

    scale = 1.0 / params.alpha
    norm = quadrature_infinite(density, rule, scale=scale).real
    variance = quadrature_infinite(lambda xi: xi * xi * density(xi), rule, scale=scale).real / norm
    inside = quadrature(density, float(xi_grid.min()), float(xi_grid.max()), rule).real
    tail_mass = max(0.0, norm - inside) / norm
    if tail_mass > tail_tol:
        logger.warning(
            "n=%d, beta/alpha=%.3g: %.2e of the density lies outside the grid", n, params.beta / params.alpha, tail_mass
        )
    return DensityProfile(density(xi_grid) / norm, variance, norm, tail_mass)


def fig1_rows(
    alpha: float,
    ratios: Sequence[float] = FIG1_RATIOS,
    levels: Sequence[int] = FIG1_LEVELS,
    alpha_xi_max: float = 10.0,
    n_points: int = 401,
    rule: QuadratureRule = QuadratureRule(),
) -> tuple[list[list[float]], dict[tuple[float, int], float]]:
    """
    Confinement curves: rows (alpha_xi, density_over_alpha, beta_over_alpha, n) and variance per (ratio, n).
    """
    alpha_xi = np.linspace(-alpha_xi_max, alpha_xi_max, n_points)
    rows: list[list[float]] = []
    variances: dict[tuple[float, int], float] = {}
    for ratio in ratios:
        params = QuasiFreeParams(alpha=alpha, beta=ratio * alpha)
        for n in levels:
            profile = density_profile(params, n, alpha_xi / alpha, rule)
            variances[(ratio, n)] = profile.variance
            rows.extend(
                [float(ax), float(d / alpha), float(ratio), float(n)] for ax, d in zip(alpha_xi, profile.densities)
            )
    return rows, variances
