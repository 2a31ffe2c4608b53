"""Domain types and complex-polynomial algebra for the auxiliary function mu(x)."""

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npp

from src.errors import BranchCutProximity, InvalidParameter, SingularMomentum

# Absolute coefficient tolerance for PT tests (inputs are user-entered constants)
POLY_TOL = 1e-12

# |1 + mu| below this on a contour means the momentum operator is singular there
SINGULAR_TOL = 1e-8

ArrayOrScalar = Union[complex, np.ndarray]


@dataclass(frozen=True)
class ComplexPolynomial:
    """Polynomial sum_k coeffs[k] x^k with complex coefficients, trailing zeros trimmed."""

    coeffs: tuple[complex, ...] = ()

    def __post_init__(self) -> None:
        values = [complex(c) for c in self.coeffs]
        if not all(cmath.isfinite(c) for c in values):
            raise InvalidParameter("polynomial coefficients must be finite")
        while values and values[-1] == 0:
            values.pop()
        object.__setattr__(self, "coeffs", tuple(values))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.complex128)

    def __call__(self, x: ArrayOrScalar) -> ArrayOrScalar:
        return eval_poly(self, x)

    def __add__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        if self.is_zero or other.is_zero:
            return self if other.is_zero else other
        return ComplexPolynomial(tuple(npp.polyadd(self.as_array(), other.as_array())))

    def __sub__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        return self + other.scaled(-1.0)

    def __mul__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        if self.is_zero or other.is_zero:
            return ComplexPolynomial()
        return ComplexPolynomial(tuple(npp.polymul(self.as_array(), other.as_array())))

    def scaled(self, factor: complex) -> "ComplexPolynomial":
        return ComplexPolynomial(tuple(factor * c for c in self.coeffs))

    @classmethod
    def constant(cls, value: complex) -> "ComplexPolynomial":
        return cls((value,))

    def to_json(self) -> list[list[float]]:
        """Serialize as [[re, im], ...], index = power of x."""
        return [[c.real, c.imag] for c in self.coeffs]

    @classmethod
    def from_json(cls, pairs: Sequence[Any]) -> "ComplexPolynomial":
        coeffs = []
        for pair in pairs:
            if isinstance(pair, (int, float)):
                coeffs.append(complex(pair))
                continue
            if len(pair) != 2:
                raise InvalidParameter(f"coefficient must be an [re, im] pair, got {pair!r}")
            coeffs.append(complex(float(pair[0]), float(pair[1])))
        return cls(tuple(coeffs))


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar and mass, both strictly positive (default units hbar = m = 1)."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        for name in ("hbar", "mass"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidParameter(f"{name} must be positive, got {value}")

    @property
    def kinetic(self) -> float:
        """hbar^2 / 2m, the prefactor of the kinetic term."""
        return self.hbar * self.hbar / (2.0 * self.mass)


@dataclass(frozen=True)
class QuasiFreeParams:
    """Parameters of mu(x) = alpha^2 x^2 + 2i beta x; omega = sqrt(alpha^2 + beta^2)."""

    alpha: float
    beta: float = 0.0
    omega: float = field(init=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha <= 0:
            raise InvalidParameter(f"alpha must be positive, got {self.alpha}")
        if not math.isfinite(self.beta):
            raise InvalidParameter(f"beta must be finite, got {self.beta}")
        object.__setattr__(self, "omega", math.hypot(self.alpha, self.beta))

    @property
    def contour_offset(self) -> float:
        """Im(x) of the line on which xi = x + i beta/alpha^2 is real."""
        return -self.beta / (self.alpha * self.alpha)


@dataclass(frozen=True)
class Contour:
    """Horizontal line Im(x) = offset_b sampled at n_points on [-L, L]."""

    offset_b: float
    half_length: float
    n_points: int
    spacing: float = field(init=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.offset_b):
            raise InvalidParameter("contour offset must be finite")
        if not math.isfinite(self.half_length) or self.half_length <= 0:
            raise InvalidParameter(f"half_length must be positive, got {self.half_length}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise InvalidParameter(f"n_points must be an integer >= 3, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "spacing", 2.0 * self.half_length / (self.n_points - 1))

    @classmethod
    def real_axis(cls, half_length: float, n_points: int) -> "Contour":
        return cls(0.0, half_length, n_points)

    @classmethod
    def shifted(cls, params: QuasiFreeParams, half_length: float, n_points: int) -> "Contour":
        return cls(params.contour_offset, half_length, n_points)

    @property
    def xi(self) -> np.ndarray:
        # Built around the centre so that xi[N-1-j] == -xi[j] exactly
        offsets = np.arange(self.n_points, dtype=np.float64) - 0.5 * (self.n_points - 1)
        return offsets * self.spacing

    @property
    def points(self) -> np.ndarray:
        return self.xi + 1j * self.offset_b

    @property
    def midpoints(self) -> np.ndarray:
        offsets = np.arange(self.n_points - 1, dtype=np.float64) + 0.5 - 0.5 * (self.n_points - 1)
        return offsets * self.spacing + 1j * self.offset_b

    @property
    def is_reflection_invariant(self) -> bool:
        return self.offset_b == 0.0

    def with_points(self, n_points: int) -> "Contour":
        return Contour(self.offset_b, self.half_length, n_points)


def eval_poly(p: ComplexPolynomial, x: ArrayOrScalar) -> ArrayOrScalar:
    """Horner evaluation of p at x (scalar or array)."""
    if p.is_zero:
        return np.zeros_like(np.asarray(x, dtype=np.complex128))[()]
    return npp.polyval(x, p.as_array())


def derive_poly(p: ComplexPolynomial) -> ComplexPolynomial:
    if p.degree < 1:
        return ComplexPolynomial()
    return ComplexPolynomial(tuple(npp.polyder(p.as_array())))


def pt_reflect(p: ComplexPolynomial) -> ComplexPolynomial:
    """PT image mu*(-x): coefficient k becomes (-1)^k conj(c_k)."""
    return ComplexPolynomial(
        tuple(((-1) ** k) * c.conjugate() for k, c in enumerate(p.coeffs))
    )


def is_pt_symmetric(p: ComplexPolynomial, tol: float = POLY_TOL) -> bool:
    """True iff even coefficients are real and odd ones imaginary, within tol."""
    if tol < 0:
        raise InvalidParameter(f"tol must be non-negative, got {tol}")
    reflected = pt_reflect(p)
    size = max(len(p.coeffs), len(reflected.coeffs))
    a = np.zeros(size, dtype=np.complex128)
    b = np.zeros(size, dtype=np.complex128)
    a[: len(p.coeffs)] = p.coeffs
    b[: len(reflected.coeffs)] = reflected.coeffs
    return bool(size == 0 or np.max(np.abs(a - b)) <= tol)


def make_quasi_free_mu(params: QuasiFreeParams) -> ComplexPolynomial:
    return ComplexPolynomial((0.0, 2j * params.beta, params.alpha**2))


def quasi_free_params_of(mu: ComplexPolynomial, tol: float = POLY_TOL) -> Optional[QuasiFreeParams]:
    """Recover (alpha, beta) when mu belongs to the quasi-free family, else None."""
    if mu.degree != 2:
        return None
    c0, c1, c2 = mu.coeffs
    if abs(c0) > tol or abs(c1.real) > tol or abs(c2.imag) > tol or c2.real <= 0:
        return None
    return QuasiFreeParams(alpha=math.sqrt(c2.real), beta=c1.imag / 2.0)


def one_plus_mu(mu: ComplexPolynomial, x: np.ndarray) -> np.ndarray:
    """1 + mu(x), raising SingularMomentum where it (nearly) vanishes."""
    values = 1.0 + np.asarray(eval_poly(mu, x), dtype=np.complex128)
    smallest = float(np.min(np.abs(values))) if values.size else 1.0
    if smallest < SINGULAR_TOL:
        raise SingularMomentum(f"|1 + mu| = {smallest:.3e} on the contour (limit {SINGULAR_TOL:g})")
    return values


def principal_sqrt(values: np.ndarray) -> np.ndarray:
    """Principal square root, refusing radicands on the negative real axis."""
    values = np.asarray(values, dtype=np.complex128)
    scale = np.maximum(1.0, np.abs(values))
    on_cut = (values.real < 0) & (np.abs(values.imag) < SINGULAR_TOL * scale)
    if np.any(on_cut):
        raise BranchCutProximity("square-root radicand crosses the negative real axis on this contour")
    return np.sqrt(values)
