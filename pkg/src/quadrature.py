"""Composite Gauss-Legendre / Simpson quadrature with panel doubling.

Integrands are vectorized callables: they take a 1-D array of real abscissae and
return an array of (real or complex) values of the same shape.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.errors import InvalidParameter, NoQuadratureConvergence

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

MAX_DOUBLINGS = 20
QUADRATURE_KINDS = ("gauss_legendre", "simpson")


@dataclass(frozen=True)
class QuadratureRule:
    """Composite rule; panels is the starting panel count, doubled until converged."""

    kind: str = "gauss_legendre"
    panels: int = 4
    adaptive_tol: float = 1e-13
    order: int = 16

    def __post_init__(self) -> None:
        if self.kind not in QUADRATURE_KINDS:
            raise InvalidParameter(f"quadrature kind must be one of {QUADRATURE_KINDS}, got {self.kind!r}")
        if self.panels < 1:
            raise InvalidParameter(f"panels must be >= 1, got {self.panels}")
        if self.order < 1:
            raise InvalidParameter(f"order must be >= 1, got {self.order}")
        if not self.adaptive_tol > 0:
            raise InvalidParameter(f"adaptive_tol must be positive, got {self.adaptive_tol}")


def _fixed_rule(f: Integrand, lo: np.ndarray, hi: np.ndarray, panels: int, rule: QuadratureRule) -> np.ndarray:
    """Apply the composite rule with `panels` panels on each interval [lo_i, hi_i]."""
    lo = np.atleast_1d(lo).astype(np.float64)
    hi = np.atleast_1d(hi).astype(np.float64)
    frac = np.linspace(0.0, 1.0, panels + 1)
    edges = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    left, right = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (right - left)
    if rule.kind == "gauss_legendre":
        xg, wg = np.polynomial.legendre.leggauss(rule.order)
        pts = (0.5 * (left + right))[..., None] + half[..., None] * xg
        vals = np.asarray(f(pts.ravel())).reshape(pts.shape)
        return np.sum(vals * wg * half[..., None], axis=(1, 2))
    # Simpson: each panel is split once, nodes shared between neighbours
    nodes = np.empty((lo.size, 2 * panels + 1))
    nodes[:, 0::2] = edges
    nodes[:, 1::2] = left + half
    vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
    weights = np.ones(2 * panels + 1)
    weights[1::2] = 4.0
    weights[2:-1:2] = 2.0
    return np.sum(vals * weights, axis=1) * (hi - lo) / (6.0 * panels)


def quadrature_segments(f: Integrand, lo: np.ndarray, hi: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """Integrals of f over every [lo_i, hi_i], refined jointly by panel doubling."""
    panels = rule.panels
    previous = _fixed_rule(f, lo, hi, panels, rule)
    for doubling in range(1, MAX_DOUBLINGS + 1):
        panels *= 2
        current = _fixed_rule(f, lo, hi, panels, rule)
        change = np.abs(current - previous)
        if np.all(change <= rule.adaptive_tol * (1.0 + np.abs(current))):
            logger.debug("quadrature converged after %d doublings (%d panels)", doubling, panels)
            return current.astype(np.complex128)
        previous = current
    raise NoQuadratureConvergence(
        f"no convergence after {MAX_DOUBLINGS} doublings, last change {float(np.max(change)):.3e}"
    )


def quadrature(f: Integrand, a: float, b: float, rule: QuadratureRule) -> complex:
    """Integral of f over [a, b]."""
    if not a < b:
        raise InvalidParameter(f"quadrature needs a < b, got [{a}, {b}]")
    return complex(quadrature_segments(f, np.array([a]), np.array([b]), rule)[0])


def _require_open_rule(rule: QuadratureRule) -> None:
    # tan(theta) is infinite at theta = +-pi/2, which Simpson samples
    if rule.kind != "gauss_legendre":
        raise InvalidParameter(f"{rule.kind} rule samples interval endpoints; infinite ranges need gauss_legendre")


def quadrature_infinite(f: Integrand, rule: QuadratureRule, scale: float = 1.0) -> complex:
    """Integral of f over the real line via xi = scale * tan(theta)."""
    _require_open_rule(rule)

    def mapped(theta: np.ndarray) -> np.ndarray:
        cos = np.cos(theta)
        return np.asarray(f(scale * np.tan(theta))) * (scale / (cos * cos))

    return quadrature(mapped, -0.5 * math.pi, 0.5 * math.pi, rule)


def quadrature_tail(f: Integrand, start: float, direction: int, rule: QuadratureRule, scale: float = 1.0) -> complex:
    """Integral of f from start to +inf (direction=+1) or from -inf to start (direction=-1)."""
    if direction not in (1, -1):
        raise InvalidParameter(f"direction must be +1 or -1, got {direction}")
    _require_open_rule(rule)

    def mapped(theta: np.ndarray) -> np.ndarray:
        cos = np.cos(theta)
        return np.asarray(f(start + direction * scale * np.tan(theta))) * (scale / (cos * cos))

    return quadrature(mapped, 0.0, 0.5 * math.pi, rule)
