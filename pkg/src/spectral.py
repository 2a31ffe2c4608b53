"""
Discretization of the CGEMO Hamiltonian and the bound-state driver.

Two paths:
- shifted contour (quasi-free mu): Sturm-Liouville form, real symmetric tridiagonal matrix
- real axis (any PT-symmetric polynomial mu): dense complex matrix from order-2/4 stencils

Unknowns are the interior grid nodes 1..N-2; nodes 0 and N-1 carry the boundary condition.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy import linalg

from src.eigensolvers import (
    DenseComplexMatrix,
    SymTridiagMatrix,
    eig_dense_complex,
    eig_sym_tridiag_lowest,
    sort_spectrum,
)
from src.errors import (
    AccuracyNotReached,
    EupSpectraError,
    InvalidParameter,
    NonRealCoefficients,
    PairingViolation,
)
from src.model import (
    ComplexPolynomial,
    Contour,
    PhysicalConstants,
    derive_poly,
    one_plus_mu,
    principal_sqrt,
    quasi_free_params_of,
)
from src.operators import PotentialSpec, StencilScheme, WavefunctionTable, hamiltonian_coefficients
from src.quadrature import QuadratureRule, quadrature_tail

logger = logging.getLogger(__name__)

CONTOUR_CHOICES = ("shifted", "real_axis")
BOUNDARY_CHOICES = ("auto", "dirichlet", "asymptotic")

# Relative imaginary-part bound for real coefficients on the shifted contour
COEFFICIENT_REALITY_TOL = 1e-10

# Inverse-iteration shift, relative to max(1, |lambda|)
INVERSE_SHIFT = 1e-10

DEFAULT_REALITY_TOL = {"shifted": 1e-8, "real_axis": 1e-6}

# Stencil weights by offset; first derivative over h, second over h^2
FIRST_DERIVATIVE = {
    2: {-1: -0.5, 1: 0.5},
    4: {-2: 1.0 / 12.0, -1: -8.0 / 12.0, 1: 8.0 / 12.0, 2: -1.0 / 12.0},
}
SECOND_DERIVATIVE = {
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    4: {-2: -1.0 / 12.0, -1: 16.0 / 12.0, 0: -30.0 / 12.0, 1: 16.0 / 12.0, 2: -1.0 / 12.0},
}


@dataclass(frozen=True)
class GridMeta:
    contour_choice: str
    offset_b: float
    half_length: float
    n_points: int
    order: int
    boundary: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "choice": self.contour_choice,
            "offset_b": self.offset_b,
            "half_length": self.half_length,
            "n_points": self.n_points,
            "order": self.order,
            "boundary": self.boundary,
        }


@dataclass(frozen=True)
class SpectrumReport:
    """Classified eigenvalues (sorted by real part) with convergence metadata."""

    eigenvalues: np.ndarray
    labels: tuple[str, ...]
    n_real: int
    broken: bool
    reality_tol: float
    grid_meta: Optional[GridMeta] = None
    convergence_estimate: Optional[np.ndarray] = None
    truncation_estimate: Optional[np.ndarray] = None
    extrapolated: Optional[np.ndarray] = None
    accuracy_target: Optional[float] = None
    accuracy_reached: bool = True
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def max_abs_imag(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag))) if self.eigenvalues.size else 0.0

    def to_dict(self) -> dict[str, Any]:
        convergence: dict[str, Any] = {
            "accuracy_target": self.accuracy_target,
            "accuracy_reached": self.accuracy_reached,
        }
        if self.convergence_estimate is not None:
            convergence["estimate"] = [float(v) for v in self.convergence_estimate]
        if self.truncation_estimate is not None:
            convergence["truncation"] = [float(v) for v in self.truncation_estimate]
        if self.extrapolated is not None:
            convergence["extrapolated"] = [complex(v) for v in self.extrapolated]
        return {
            "params": self.params,
            "contour": self.grid_meta.to_dict() if self.grid_meta else None,
            "eigenvalues": [complex(v) for v in self.eigenvalues],
            "labels": list(self.labels),
            "n_real": self.n_real,
            "broken": self.broken,
            "reality_tol": self.reality_tol,
            "convergence": convergence,
        }


@dataclass(frozen=True)
class EigenPair:
    """(E, phi); residual is ||H v - E v|| / ||v|| for the discrete matrix."""

    value: complex
    vector: WavefunctionTable
    residual: float = 0.0


@dataclass(frozen=True)
class BoundStateSolution:
    pairs: list[EigenPair]
    report: SpectrumReport

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.report.eigenvalues


def _poly_distance(p: ComplexPolynomial, q: ComplexPolynomial) -> float:
    diff = p - q
    return float(np.max(np.abs(diff.as_array()))) if not diff.is_zero else 0.0


def _check_self_adjoint_identity(mu: ComplexPolynomial) -> None:
    """d/dx (1+mu)^2 must equal 2 (1+mu) mu' coefficient-wise."""
    one_plus = mu + ComplexPolynomial.constant(1.0)
    lhs = derive_poly(one_plus * one_plus)
    rhs = (one_plus * derive_poly(mu)).scaled(2.0)
    scale = 1.0 + max((abs(c) for c in lhs.coeffs), default=0.0)
    if _poly_distance(lhs, rhs) > 1e-12 * scale:
        raise EupSpectraError("self-adjoint rewrite failed: d(1+mu)^2/dx != 2(1+mu)mu'")


def _tail_factor(mu: ComplexPolynomial, offset_b: float, xi: float, direction: int, rule: QuadratureRule) -> complex:
    """g = T / sqrt(1+mu) with T the distance to infinity along the line in the PCT coordinate."""

    def inverse(t: np.ndarray) -> np.ndarray:
        return 1.0 / one_plus_mu(mu, t + 1j * offset_b)

    tail = quadrature_tail(inverse, xi, direction, rule, scale=max(1.0, abs(xi)))
    root = principal_sqrt(one_plus_mu(mu, np.array([xi + 1j * offset_b])))[0]
    return complex(tail / root)


def tail_closure_ratios(
    mu: ComplexPolynomial, contour: Contour, width: int = 1, rule: Optional[QuadratureRule] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Ghost-node ratios for the asymptotic boundary closure.

    left[k] = g(xi_0 - k h) / g(xi_1), right[k] = g(xi_{N-1} + k h) / g(xi_{N-2}), k = 0..width-1.
    """
    if mu.degree < 2:
        raise InvalidParameter("asymptotic closure needs deg(mu) >= 2 (1/(1+mu) must be integrable)")
    rule = rule or QuadratureRule()
    xi = contour.xi
    h = contour.spacing
    n = contour.n_points
    b = contour.offset_b
    left_anchor = _tail_factor(mu, b, xi[1], -1, rule)
    right_anchor = _tail_factor(mu, b, xi[n - 2], 1, rule)
    left = np.array([_tail_factor(mu, b, xi[0] - k * h, -1, rule) / left_anchor for k in range(width)])
    right = np.array([_tail_factor(mu, b, xi[n - 1] + k * h, 1, rule) / right_anchor for k in range(width)])
    return left, right


def _resolve_boundary(boundary: str, mu: ComplexPolynomial, V: PotentialSpec) -> str:
    if boundary not in BOUNDARY_CHOICES:
        raise InvalidParameter(f"boundary must be one of {BOUNDARY_CHOICES}, got {boundary!r}")
    if boundary == "auto":
        return "asymptotic" if mu.degree >= 2 and V.is_zero else "dirichlet"
    return boundary


def assemble_sturm_liouville(
    mu: ComplexPolynomial,
    V: PotentialSpec,
    contour: Contour,
    c: PhysicalConstants,
    boundary: str = "dirichlet",
    rule: Optional[QuadratureRule] = None,
) -> SymTridiagMatrix:
    """
    -(hbar^2/2m) (A f')' + W f with A = (1+mu)^2, W = -(hbar^2/2m)[(1+mu)mu''/2 + mu'^2/4] + V.

    The default Dirichlet rows truncate eigenfunctions that decay only algebraically, so
    eigenvalues converge like 1/L: for alpha=1, beta=0.5 at N=2000, L=40 the lowest one is
    about 0.648, not 0.625. Pass boundary="asymptotic" (what solve_bound_states picks by
    default) for the tail-closed rows.
    """
    boundary = _resolve_boundary(boundary, mu, V)
    _check_self_adjoint_identity(mu)
    n_pts = contour.n_points
    h = contour.spacing
    q_mid = one_plus_mu(mu, contour.midpoints)
    q, _A, _B, C = hamiltonian_coefficients(mu, contour.points)
    A_mid = q_mid * q_mid
    W = -c.kinetic * C
    if not V.is_zero:
        W = W + V.evaluate(contour.points)
    for name, values in (("1+mu", np.concatenate([q, q_mid])), ("A", A_mid), ("W", W)):
        scale = max(1.0, float(np.max(np.abs(values))))
        worst = float(np.max(np.abs(values.imag)))
        if worst > COEFFICIENT_REALITY_TOL * scale:
            raise NonRealCoefficients(
                f"{name} has |Im| = {worst:.3e} on Im(x) = {contour.offset_b:g} (scale {scale:.3e})"
            )
    if np.any(q.real <= 0) or np.any(q_mid.real <= 0):
        raise NonRealCoefficients("1+mu must be positive on the contour for the Sturm-Liouville form")
    a = A_mid.real
    k = c.kinetic / (h * h)
    diag = k * (a[:-1] + a[1:]) + W.real[1:n_pts - 1]
    offdiag = -k * a[1:n_pts - 2]
    if boundary == "asymptotic":
        left, right = tail_closure_ratios(mu, contour, 1, rule)
        for ratio in (left[0], right[0]):
            if abs(ratio.imag) > COEFFICIENT_REALITY_TOL * max(1.0, abs(ratio)):
                raise NonRealCoefficients(f"tail closure ratio {ratio} is not real")
        diag[0] += -k * a[0] * left[0].real
        diag[-1] += -k * a[-1] * right[0].real
    logger.debug("Assembled tridiagonal: n=%d, h=%.4g, boundary=%s", diag.size, h, boundary)
    return SymTridiagMatrix(diag, offdiag)


def assemble_dense(
    mu: ComplexPolynomial,
    V: PotentialSpec,
    contour: Contour,
    c: PhysicalConstants,
    s: StencilScheme,
    boundary: str = "dirichlet",
    rule: Optional[QuadratureRule] = None,
) -> DenseComplexMatrix:
    """Row i is the order-s stencil of H at grid node i+1; out-of-domain values are zero (Dirichlet) or tail-closed."""
    boundary = _resolve_boundary(boundary, mu, V)
    order = s.order
    n = contour.n_points - 2
    h = contour.spacing
    x = contour.points[1:-1]
    _q, A, B, C = hamiltonian_coefficients(mu, x)
    extra = -c.kinetic * C
    if not V.is_zero:
        extra = extra + V.evaluate(x)
    width = order // 2
    left = right = None
    if boundary == "asymptotic":
        left, right = tail_closure_ratios(mu, contour, width, rule)
    m = np.zeros((n, n), dtype=np.complex128)
    rows = np.arange(n)
    for off in range(-width, width + 1):
        coef = -c.kinetic * (
            A * (SECOND_DERIVATIVE[order].get(off, 0.0) / (h * h)) + B * (FIRST_DERIVATIVE[order].get(off, 0.0) / h)
        )
        if off == 0:
            coef = coef + extra
        cols = rows + off
        inside = (cols >= 0) & (cols < n)
        m[rows[inside], cols[inside]] += coef[inside]
        if left is None:
            continue
        for r in rows[cols < 0]:
            m[r, 0] += coef[r] * left[-(cols[r] + 1)]
        for r in rows[cols >= n]:
            m[r, n - 1] += coef[r] * right[cols[r] - n]
    logger.debug("Assembled dense: n=%d, order=%d, boundary=%s", n, order, boundary)
    return DenseComplexMatrix(m)


def assemble_momentum_matrix(mu: ComplexPolynomial, contour: Contour, c: PhysicalConstants) -> DenseComplexMatrix:
    """p = -i hbar S D S on the interior nodes, S = diag sqrt(1+mu), D the central difference (Dirichlet)."""
    x = contour.points[1:-1]
    root = principal_sqrt(one_plus_mu(mu, x))
    n = x.size
    d = np.zeros((n, n))
    idx = np.arange(n - 1)
    d[idx, idx + 1] = 0.5 / contour.spacing
    d[idx + 1, idx] = -0.5 / contour.spacing
    return DenseComplexMatrix(-1j * c.hbar * d * np.outer(root, root))


def hermiticity_defect(matrix: DenseComplexMatrix) -> float:
    """max|M - M^dagger| / max|M|."""
    m = matrix.entries
    scale = float(np.max(np.abs(m)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T))) / scale


def classify_spectrum(
    eigs: np.ndarray, reality_tol: float, grid_meta: Optional[GridMeta] = None
) -> SpectrumReport:
    """Label eigenvalues real/complex and pair every complex one with its conjugate."""
    if not reality_tol > 0:
        raise InvalidParameter(f"reality_tol must be positive, got {reality_tol}")
    values = sort_spectrum(np.asarray(eigs, dtype=np.complex128))
    is_complex = np.abs(values.imag) > reality_tol * np.maximum(1.0, np.abs(values.real))
    used = np.zeros(values.size, dtype=bool)
    for i in np.flatnonzero(is_complex):
        if used[i]:
            continue
        target = np.conj(values[i])
        tol = reality_tol * max(1.0, abs(values[i]))
        partner = -1
        for j in np.flatnonzero(is_complex & ~used):
            if j != i and abs(values[j] - target) <= tol:
                partner = j
                break
        if partner < 0:
            raise PairingViolation(f"eigenvalue {values[i]:.10g} has no conjugate partner within {tol:.1e}")
        used[i] = used[partner] = True
    labels = tuple("complex" if flag else "real" for flag in is_complex)
    n_real = int(np.count_nonzero(~is_complex))
    return SpectrumReport(
        eigenvalues=values,
        labels=labels,
        n_real=n_real,
        broken=bool(np.any(is_complex)),
        reality_tol=reality_tol,
        grid_meta=grid_meta,
    )


def _lowest_closed_under_conjugation(values: np.ndarray, count: int, reality_tol: float) -> np.ndarray:
    """The count lowest eigenvalues, extended by one when the cut would split a conjugate pair."""
    values = sort_spectrum(values)
    chosen = values[:count]
    if count < values.size:
        last = chosen[-1]
        if abs(last.imag) > reality_tol * max(1.0, abs(last.real)):
            partner = np.argmin(np.abs(values[count:] - np.conj(last)))
            chosen = np.append(chosen, values[count + partner])
    return sort_spectrum(chosen)


def grid_defaults(mu: ComplexPolynomial, choice: str) -> tuple[float, int, int]:
    params = quasi_free_params_of(mu)
    scale = 1.0 / params.alpha if params else 1.0
    if choice == "shifted":
        return 40.0 * scale, 4000, 2
    return 30.0 * scale, 800, 4


def _eigenvalues_on(
    mu, V, contour: Contour, c, choice: str, order: int, boundary: str, count: int, reality_tol: float, rule
):
    """Lowest eigenvalues and the assembled matrix on one grid."""
    if choice == "shifted":
        matrix = assemble_sturm_liouville(mu, V, contour, c, boundary, rule)
        values = eig_sym_tridiag_lowest(matrix, min(count, matrix.n)).astype(np.complex128)
        return values, matrix
    matrix = assemble_dense(mu, V, contour, c, StencilScheme(order=order, richardson=False), boundary, rule)
    values = eig_dense_complex(matrix)
    return _lowest_closed_under_conjugation(values, min(count, matrix.n), reality_tol), matrix


def _nearest(candidates: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.array([candidates[np.argmin(np.abs(candidates - value))] for value in values])


def _inverse_iteration(matrix, value: complex, found: list[tuple[complex, np.ndarray]]) -> tuple[np.ndarray, float]:
    """Two shifted inverse-iteration sweeps, orthogonalized against near-degenerate vectors."""
    shift = value + INVERSE_SHIFT * max(1.0, abs(value))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(matrix.n).astype(np.complex128)
    degenerate = [vec for val, vec in found if abs(val - value) <= 1e-8 * max(1.0, abs(value))]
    if isinstance(matrix, SymTridiagMatrix):
        bands = np.zeros((3, matrix.n))
        bands[0, 1:] = matrix.offdiag
        bands[1, :] = matrix.diag - shift.real
        bands[2, :-1] = matrix.offdiag

        def solve(rhs: np.ndarray) -> np.ndarray:
            return linalg.solve_banded((1, 1), bands, rhs)

        def apply(vec: np.ndarray) -> np.ndarray:
            out = matrix.diag * vec
            out[:-1] += matrix.offdiag * vec[1:]
            out[1:] += matrix.offdiag * vec[:-1]
            return out

    else:
        factor = linalg.lu_factor(matrix.entries - shift * np.eye(matrix.n))

        def solve(rhs: np.ndarray) -> np.ndarray:
            return linalg.lu_solve(factor, rhs)

        def apply(vec: np.ndarray) -> np.ndarray:
            return matrix.entries @ vec

    for _ in range(2):
        v = solve(v)
        for u in degenerate:
            v = v - (np.vdot(u, v) / np.vdot(u, u)) * u
        v = v / np.linalg.norm(v)
    residual = float(np.linalg.norm(apply(v) - value * v))
    return v, residual


def _normalized_table(
    v: np.ndarray, contour: Contour, closure: Optional[tuple[np.ndarray, np.ndarray]], label: str
) -> WavefunctionTable:
    """Bilinear normalization sum v^2 h = 1; largest component on Re(x) >= 0 has positive real part."""
    h = contour.spacing
    bilinear = complex(np.sum(v * v) * h)
    if abs(bilinear) <= 1e-12 * float(np.sum(np.abs(v) ** 2) * h):
        logger.warning("%s: bilinear norm vanishes, falling back to the Hermitian norm", label)
        v = v / np.sqrt(np.sum(np.abs(v) ** 2) * h)
    else:
        v = v / principal_sqrt(np.array([bilinear]))[0]
    right_half = contour.points[1:-1].real >= 0
    idx = np.flatnonzero(right_half)[np.argmax(np.abs(v[right_half]))]
    if v[idx].real < 0:
        v = -v
    values = np.zeros(contour.n_points, dtype=np.complex128)
    values[1:-1] = v
    if closure is not None:
        values[0] = closure[0][0] * v[0]
        values[-1] = closure[1][0] * v[-1]
    return WavefunctionTable(contour, values, label)


def solve_bound_states(
    mu: ComplexPolynomial,
    V: PotentialSpec,
    c: PhysicalConstants,
    contour_choice: str,
    n_levels: int,
    accuracy_target: float = 1e-3,
    *,
    half_length: Optional[float] = None,
    n_points: Optional[int] = None,
    order: Optional[int] = None,
    boundary: str = "auto",
    reality_tol: Optional[float] = None,
    strict: bool = False,
    with_vectors: bool = True,
    richardson: bool = True,
    truncation: Optional[bool] = None,
    rule: Optional[QuadratureRule] = None,
) -> BoundStateSolution:
    """
    Lowest n_levels of H phi = E phi with eigenvectors and a convergence estimate.

    Spacing part: the comparison grid has (N-1)//2 + 1 points on the same [-L, L] and
    contributes |E_f - E_c| / (rho^p - 1) with rho = h_c / h_f and p the scheme order.
    Truncation part: a re-solve on [-2L, 2L] at the same spacing contributes |E_L - E_2L|.
    The reported estimate is their sum and is what accuracy_target is checked against.
    truncation=None enables the re-solve on the shifted contour only; on the dense path it
    costs eight times the main solve.
    """
    if contour_choice not in CONTOUR_CHOICES:
        raise InvalidParameter(f"contour must be one of {CONTOUR_CHOICES}, got {contour_choice!r}")
    if n_levels < 1:
        raise InvalidParameter(f"n_levels must be >= 1, got {n_levels}")
    default_L, default_N, default_order = grid_defaults(mu, contour_choice)
    L = half_length if half_length is not None else default_L
    N = n_points if n_points is not None else default_N
    order = order if order is not None else default_order
    if contour_choice == "shifted":
        params = quasi_free_params_of(mu)
        if params is None:
            raise InvalidParameter("the shifted contour needs mu = alpha^2 x^2 + 2i beta x")
        if order != 2:
            raise InvalidParameter("the tridiagonal Sturm-Liouville path is second order")
        contour = Contour.shifted(params, L, N)
    else:
        if order not in (2, 4):
            raise InvalidParameter(f"stencil order must be 2 or 4, got {order}")
        contour = Contour.real_axis(L, N)
    boundary = _resolve_boundary(boundary, mu, V)
    tol = reality_tol if reality_tol is not None else DEFAULT_REALITY_TOL[contour_choice]
    rule = rule or QuadratureRule()
    meta = GridMeta(contour_choice, contour.offset_b, L, N, order, boundary)
    logger.info("Solving %s contour: L=%.4g, N=%d, order=%d, boundary=%s", contour_choice, L, N, order, boundary)

    fine, matrix = _eigenvalues_on(mu, V, contour, c, contour_choice, order, boundary, n_levels, tol, rule)
    report = classify_spectrum(fine, tol, meta)

    values = report.eigenvalues
    estimate = extrapolated = truncation_estimate = None
    if richardson:
        coarse_contour = contour.with_points((N - 1) // 2 + 1)
        coarse, _ = _eigenvalues_on(mu, V, coarse_contour, c, contour_choice, order, boundary, values.size + 2, tol, rule)
        rho = coarse_contour.spacing / contour.spacing
        denom = rho**order - 1.0
        matched = _nearest(coarse, values)
        estimate = np.abs(values - matched) / denom
        extrapolated = values + (values - matched) / denom
    if truncation is None:
        truncation = contour_choice == "shifted"
    if truncation:
        wide_contour = Contour(contour.offset_b, 2.0 * L, 2 * N - 1)
        wide, _ = _eigenvalues_on(mu, V, wide_contour, c, contour_choice, order, boundary, values.size + 2, tol, rule)
        truncation_estimate = np.abs(values - _nearest(wide, values))
        estimate = truncation_estimate if estimate is None else estimate + truncation_estimate
        logger.debug("truncation estimate at L=%.4g: %s", L, truncation_estimate)

    reached = True
    if estimate is not None:
        relative = estimate / np.maximum(np.abs(values), 1e-300)
        reached = bool(np.all(relative <= accuracy_target))
        if not reached:
            message = f"convergence estimate {float(np.max(relative)):.3e} exceeds accuracy target {accuracy_target:g}"
            if strict:
                raise AccuracyNotReached(message)
            logger.warning("%s (N=%d, L=%.4g)", message, N, L)

    report = SpectrumReport(
        eigenvalues=report.eigenvalues,
        labels=report.labels,
        n_real=report.n_real,
        broken=report.broken,
        reality_tol=tol,
        grid_meta=meta,
        convergence_estimate=estimate,
        truncation_estimate=truncation_estimate,
        extrapolated=extrapolated,
        accuracy_target=accuracy_target,
        accuracy_reached=reached,
        params={
            "mu": mu.to_json(),
            "potential": {"kind": V.kind, "coefficients": V.poly.to_json()},
            "hbar": c.hbar,
            "mass": c.mass,
        },
    )

    pairs: list[EigenPair] = []
    if with_vectors:
        closure = tail_closure_ratios(mu, contour, 1, rule) if boundary == "asymptotic" else None
        found: list[tuple[complex, np.ndarray]] = []
        for level, value in enumerate(report.eigenvalues, start=1):
            vec, residual = _inverse_iteration(matrix, complex(value), found)
            found.append((complex(value), vec))
            table = _normalized_table(vec, contour, closure, f"phi_{level}")
            pairs.append(EigenPair(complex(value), table, residual))
    return BoundStateSolution(pairs, report)
