"""Momentum and Hamiltonian stencils on sampled wavefunctions, and operator-identity residuals."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.errors import ContourNotReflectionInvariant, InvalidParameter
from src.model import (
    ComplexPolynomial,
    Contour,
    PhysicalConstants,
    QuasiFreeParams,
    derive_poly,
    eval_poly,
    make_quasi_free_mu,
    one_plus_mu,
)

logger = logging.getLogger(__name__)

WAVEFUNCTION_CSV_COLUMNS = ["re_x", "im_x", "re_f", "im_f"]


@dataclass(frozen=True)
class WavefunctionTable:
    """
    Complex samples on a contour grid.

    trim is the number of points at each end whose values are not trusted
    (stencil half-width); z_nodes holds the PCT coordinate when the table lives in z-space.
    """

    contour: Contour
    values: np.ndarray
    label: str = ""
    trim: int = 0
    z_nodes: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.contour.n_points,):
            raise InvalidParameter(
                f"table {self.label!r} has {values.size} values for a {self.contour.n_points}-point contour"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidParameter(f"table {self.label!r} contains non-finite values")
        if self.trim < 0 or 2 * self.trim >= self.contour.n_points:
            raise InvalidParameter(f"trim {self.trim} leaves no trusted points")
        object.__setattr__(self, "values", values)
        if self.z_nodes is not None:
            nodes = np.asarray(self.z_nodes, dtype=np.complex128)
            if nodes.shape != values.shape:
                raise InvalidParameter("z_nodes must match the table length")
            object.__setattr__(self, "z_nodes", nodes)

    @property
    def interior(self) -> slice:
        return slice(self.trim, self.contour.n_points - self.trim)

    @classmethod
    def sample(cls, contour: Contour, func, label: str = "") -> "WavefunctionTable":
        """Tabulate a vectorized callable at the contour points."""
        return cls(contour, np.asarray(func(contour.points), dtype=np.complex128), label)

    def with_values(self, values: np.ndarray, label: Optional[str] = None, trim: Optional[int] = None) -> "WavefunctionTable":
        return WavefunctionTable(
            self.contour,
            values,
            self.label if label is None else label,
            self.trim if trim is None else trim,
            self.z_nodes,
        )


@dataclass(frozen=True)
class PotentialSpec:
    """External potential V(x): zero, or a complex polynomial."""

    kind: str = "zero"
    poly: ComplexPolynomial = field(default_factory=ComplexPolynomial)

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "polynomial"):
            raise InvalidParameter(f"potential kind must be 'zero' or 'polynomial', got {self.kind!r}")
        if self.kind == "zero" and not self.poly.is_zero:
            raise InvalidParameter("a zero potential cannot carry coefficients")

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls()

    @classmethod
    def polynomial(cls, poly: ComplexPolynomial) -> "PotentialSpec":
        return cls("polynomial", poly)

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(eval_poly(self.poly, x), dtype=np.complex128)


@dataclass(frozen=True)
class StencilScheme:
    """Central differences of order 2 or 4, optionally Richardson-extrapolated from spacings h and 2h."""

    order: int = 4
    richardson: bool = True

    def __post_init__(self) -> None:
        if self.order not in (2, 4):
            raise InvalidParameter(f"stencil order must be 2 or 4, got {self.order}")

    @property
    def half_width(self) -> int:
        return self.order // 2

    @property
    def trim(self) -> int:
        return 2 * self.half_width if self.richardson else self.half_width


def _central(values: np.ndarray, h: float, order: int, step: int) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives at spacing step*h; zero where the stencil leaves the grid."""
    n = values.size
    d1 = np.zeros(n, dtype=np.complex128)
    d2 = np.zeros(n, dtype=np.complex128)
    k = step
    hk = step * h
    if order == 2:
        lo, hi = k, n - k
        plus, minus = values[lo + k:hi + k], values[lo - k:hi - k]
        d1[lo:hi] = (plus - minus) / (2.0 * hk)
        d2[lo:hi] = ((plus + minus) - 2.0 * values[lo:hi]) / (hk * hk)
        return d1, d2
    lo, hi = 2 * k, n - 2 * k
    p1, m1 = values[lo + k:hi + k], values[lo - k:hi - k]
    p2, m2 = values[lo + 2 * k:hi + 2 * k], values[lo - 2 * k:hi - 2 * k]
    d1[lo:hi] = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * hk)
    d2[lo:hi] = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * values[lo:hi]) / (12.0 * hk * hk)
    return d1, d2


def stencil_derivatives(f: WavefunctionTable, s: StencilScheme) -> tuple[np.ndarray, np.ndarray, int]:
    """(f', f'', trim) on the table's grid; values outside the trusted interior are zero."""
    trim = s.trim + f.trim
    if 2 * trim >= f.contour.n_points:
        raise InvalidParameter(f"{f.contour.n_points} points are too few for a stencil trimming {trim} per side")
    h = f.contour.spacing
    d1, d2 = _central(f.values, h, s.order, 1)
    if s.richardson:
        c1, c2 = _central(f.values, h, s.order, 2)
        gain = float(2**s.order)
        d1 = (gain * d1 - c1) / (gain - 1.0)
        d2 = (gain * d2 - c2) / (gain - 1.0)
    mask = np.zeros(f.contour.n_points, dtype=bool)
    mask[trim:f.contour.n_points - trim] = True
    d1[~mask] = 0.0
    d2[~mask] = 0.0
    return d1, d2, trim


def hamiltonian_coefficients(mu: ComplexPolynomial, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(1+mu, A, B, C) with A = (1+mu)^2, B = 2(1+mu)mu', C = (1+mu)mu''/2 + mu'^2/4."""
    d_mu = derive_poly(mu)
    dd_mu = derive_poly(d_mu)
    q = one_plus_mu(mu, x)
    mu1 = np.asarray(eval_poly(d_mu, x), dtype=np.complex128)
    mu2 = np.asarray(eval_poly(dd_mu, x), dtype=np.complex128)
    return q, q * q, 2.0 * q * mu1, 0.5 * q * mu2 + 0.25 * mu1 * mu1


def _residual_norm(residual: np.ndarray, f: WavefunctionTable, trim: int) -> float:
    n = f.contour.n_points
    scale = 1.0 + float(np.max(np.abs(f.values)))
    return float(np.max(np.abs(residual[trim:n - trim]))) / scale


def _momentum_values(mu: ComplexPolynomial, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme) -> tuple[np.ndarray, int]:
    x = f.contour.points
    q = one_plus_mu(mu, x)
    mu1 = np.asarray(eval_poly(derive_poly(mu), x), dtype=np.complex128)
    d1, _d2, trim = stencil_derivatives(f, s)
    out = -1j * c.hbar * (q * d1 + 0.5 * mu1 * f.values)
    out[:trim] = 0.0
    out[f.contour.n_points - trim:] = 0.0
    return out, trim


def apply_momentum(mu: ComplexPolynomial, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme) -> WavefunctionTable:
    """p f = -i hbar (1+mu) f' - (i hbar / 2) mu' f, trusted on the interior only."""
    values, trim = _momentum_values(mu, f, c, s)
    return f.with_values(values, label=f"p[{f.label}]", trim=trim)


def _hamiltonian_values(
    mu: ComplexPolynomial, V: PotentialSpec, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme
) -> tuple[np.ndarray, int]:
    x = f.contour.points
    _q, A, B, C = hamiltonian_coefficients(mu, x)
    d1, d2, trim = stencil_derivatives(f, s)
    out = -c.kinetic * (A * d2 + B * d1 + C * f.values)
    if not V.is_zero:
        out = out + V.evaluate(x) * f.values
    out[:trim] = 0.0
    out[f.contour.n_points - trim:] = 0.0
    return out, trim


def apply_hamiltonian(
    mu: ComplexPolynomial, V: PotentialSpec, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme
) -> WavefunctionTable:
    values, trim = _hamiltonian_values(mu, V, f, c, s)
    return f.with_values(values, label=f"H[{f.label}]", trim=trim)


def commutator_residual(mu: ComplexPolynomial, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme) -> float:
    """Sup-norm of [x, p] f - i hbar (1+mu) f over trusted points, relative to 1 + sup|f|."""
    x = f.contour.points
    p_f, trim = _momentum_values(mu, f, c, s)
    p_xf, _ = _momentum_values(mu, f.with_values(x * f.values), c, s)
    residual = x * p_f - p_xf - 1j * c.hbar * one_plus_mu(mu, x) * f.values
    return _residual_norm(residual, f, trim)


def pt_image(f: WavefunctionTable) -> WavefunctionTable:
    """(PT f)_j = conj(f_{N-1-j}); only meaningful on a reflection-invariant contour."""
    if not f.contour.is_reflection_invariant:
        raise ContourNotReflectionInvariant(
            f"PT maps Im(x) = {f.contour.offset_b:g} onto Im(x) = {-f.contour.offset_b:g}"
        )
    return f.with_values(np.conj(f.values[::-1]), label=f"PT[{f.label}]")


def pt_symmetry_residual(
    mu: ComplexPolynomial, V: PotentialSpec, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme
) -> float:
    """Sup-norm of H(PT f) - PT(H f) over trusted points, relative to 1 + sup|f|."""
    reflected = pt_image(f)
    h_of_pt, trim = _hamiltonian_values(mu, V, reflected, c, s)
    h_f, _ = _hamiltonian_values(mu, V, f, c, s)
    return _residual_norm(h_of_pt - np.conj(h_f[::-1]), f, trim)


def momentum_pt_residual(mu: ComplexPolynomial, f: WavefunctionTable, c: PhysicalConstants, s: StencilScheme) -> float:
    """Sup-norm of p(PT f) - PT(p f); the momentum analogue of pt_symmetry_residual."""
    reflected = pt_image(f)
    p_of_pt, trim = _momentum_values(mu, reflected, c, s)
    p_f, _ = _momentum_values(mu, f, c, s)
    return _residual_norm(p_of_pt - np.conj(p_f[::-1]), f, trim)


def momentum_ode_residual(
    params: QuasiFreeParams,
    p_eig: float,
    f: WavefunctionTable,
    s: StencilScheme,
    c: PhysicalConstants = PhysicalConstants(),
) -> float:
    """Sup-norm of (1 + alpha^2 x^2 + 2i beta x) f' + (alpha^2 x + i beta - i p / hbar) f."""
    x = f.contour.points
    q = one_plus_mu(make_quasi_free_mu(params), x)
    d1, _d2, trim = stencil_derivatives(f, s)
    shift = params.alpha**2 * x + 1j * params.beta - 1j * p_eig / c.hbar
    return _residual_norm(q * d1 + shift * f.values, f, trim)


def write_wavefunction_csv(table: WavefunctionTable, output_path: Path) -> None:
    """Write re_x, im_x, re_f, im_f rows (17 significant digits, header included)."""
    x = table.contour.points
    with open(output_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(WAVEFUNCTION_CSV_COLUMNS)
        for xj, fj in zip(x, table.values):
            w.writerow([f"{xj.real:.17g}", f"{xj.imag:.17g}", f"{fj.real:.17g}", f"{fj.imag:.17g}"])


def read_wavefunction_csv(path: Path, label: str = "") -> WavefunctionTable:
    """Load a table written by write_wavefunction_csv; the grid must be a uniform horizontal line."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [col.strip() for col in rows[0]] != WAVEFUNCTION_CSV_COLUMNS:
        raise InvalidParameter(f"{path}: header must be {','.join(WAVEFUNCTION_CSV_COLUMNS)}")
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 3:
        raise InvalidParameter(f"{path}: need at least 3 data rows")
    x = data[:, 0] + 1j * data[:, 1]
    contour = Contour(float(data[0, 1]), float(data[-1, 0]), data.shape[0])
    tol = 1e-12 * (1.0 + contour.half_length)
    if np.max(np.abs(contour.points - x)) > tol:
        raise InvalidParameter(f"{path}: x column is not a symmetric uniform horizontal grid")
    logger.debug("Loaded %d samples from %s", data.shape[0], path)
    return WavefunctionTable(contour, data[:, 2] + 1j * data[:, 3], label or path.stem)
