"""
In-house eigenvalue kernels, compiled with numba.

- eig_sym_tridiag: implicit QL on a symmetric tridiagonal matrix (all eigenvalues)
- eig_sym_tridiag_lowest: Sturm-sequence bisection for the k lowest eigenvalues
- eig_dense_complex: Householder reduction to Hessenberg form + single-shift complex QR

Kernels return a status (iterations used, or -1) and never raise; the wrappers
turn a failed status into NoConvergence.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from src.errors import InvalidParameter, NoConvergence

logger = logging.getLogger(__name__)

EPS = float(np.finfo(np.float64).eps)
SAFE_MIN = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class SymTridiagMatrix:
    """Real symmetric tridiagonal matrix: diag (n) and offdiag (n-1)."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self) -> None:
        diag = np.asarray(self.diag, dtype=np.float64)
        offdiag = np.asarray(self.offdiag, dtype=np.float64)
        if diag.ndim != 1 or diag.size < 1:
            raise InvalidParameter("diag must be a non-empty vector")
        if offdiag.shape != (diag.size - 1,):
            raise InvalidParameter(f"offdiag must have length {diag.size - 1}, got {offdiag.size}")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise InvalidParameter("tridiagonal entries must be finite")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def n(self) -> int:
        return self.diag.size

    @property
    def scale(self) -> float:
        """Gershgorin bound on the spectral radius."""
        radius = np.abs(self.diag).copy()
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float(np.max(radius))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class DenseComplexMatrix:
    """Square complex matrix, row-major."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise InvalidParameter(f"matrix must be square and non-empty, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InvalidParameter("matrix entries must be finite")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.entries)))


@njit(cache=True, nogil=True)
def _tql_kernel(d, e, tol, max_iter):
    # e[i] couples rows i and i+1; e[n-1] must be 0
    n = d.size
    total = 0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= tol * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return -1
            it += 1
            total += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return total


@njit(cache=True, nogil=True)
def _sturm_count(d, e2, x, pivmin):
    """Number of eigenvalues below x (LDL^T inertia count)."""
    count = 0
    tmp = d[0] - x
    if abs(tmp) < pivmin:
        tmp = -pivmin
    if tmp <= 0.0:
        count += 1
    for i in range(1, d.size):
        tmp = d[i] - x - e2[i - 1] / tmp
        if abs(tmp) < pivmin:
            tmp = -pivmin
        if tmp <= 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def _bisect_kernel(d, off, k, rtol, out):
    n = d.size
    e2 = np.empty(max(n - 1, 1))
    emax = 1.0
    for i in range(n - 1):
        e2[i] = off[i] * off[i]
        if e2[i] > emax:
            emax = e2[i]
    pivmin = SAFE_MIN * emax
    glo = d[0]
    ghi = d[0]
    for i in range(n):
        radius = 0.0
        if i > 0:
            radius += abs(off[i - 1])
        if i < n - 1:
            radius += abs(off[i])
        if d[i] - radius < glo:
            glo = d[i] - radius
        if d[i] + radius > ghi:
            ghi = d[i] + radius
    span = ghi - glo
    glo -= 2.0 * EPS * span + 2.0 * pivmin
    ghi += 2.0 * EPS * span + 2.0 * pivmin
    steps = 0
    for j in range(k):
        lo = glo
        hi = ghi
        if j > 0 and out[j - 1] > lo:
            lo = out[j - 1] - 2.0 * EPS * abs(out[j - 1]) - pivmin
        for _ in range(200):
            width = hi - lo
            if width <= rtol * max(abs(lo), abs(hi)) + pivmin:
                break
            mid = lo + 0.5 * width
            if mid == lo or mid == hi:
                break
            steps += 1
            if _sturm_count(d, e2, mid, pivmin) >= j + 1:
                hi = mid
            else:
                lo = mid
        out[j] = lo + 0.5 * (hi - lo)
    return steps


@njit(cache=True, nogil=True)
def _hessenberg_kernel(a):
    """Householder reduction of a (in place) to upper Hessenberg form."""
    n = a.shape[0]
    w = np.empty(n, dtype=np.complex128)
    v = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += a[i, k].real * a[i, k].real + a[i, k].imag * a[i, k].imag
        alpha = math.sqrt(alpha)
        if alpha == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = abs(x0)
        phase = 1.0 + 0.0j
        if ax0 > 0.0:
            phase = x0 / ax0
        v[0] = x0 + phase * alpha
        vnorm2 = v[0].real * v[0].real + v[0].imag * v[0].imag
        for i in range(1, m):
            v[i] = a[k + 1 + i, k]
            vnorm2 += v[i].real * v[i].real + v[i].imag * v[i].imag
        beta = 2.0 / vnorm2
        # left: rows k+1.., w = v^* A
        for j in range(k, n):
            w[j] = 0.0 + 0.0j
        for i in range(m):
            vi = v[i].conjugate()
            for j in range(k, n):
                w[j] += vi * a[k + 1 + i, j]
        for i in range(m):
            vi = beta * v[i]
            for j in range(k, n):
                a[k + 1 + i, j] -= vi * w[j]
        # right: columns k+1..
        for r in range(n):
            acc = 0.0 + 0.0j
            for i in range(m):
                acc += a[r, k + 1 + i] * v[i]
            acc *= beta
            for i in range(m):
                a[r, k + 1 + i] -= acc * v[i].conjugate()
        a[k + 1, k] = -phase * alpha
        for i in range(k + 2, n):
            a[i, k] = 0.0 + 0.0j


@njit(cache=True, nogil=True)
def _eig2(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]], the first one largest in modulus."""
    mid = 0.5 * (a + d)
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    l1 = mid + disc
    if abs(mid - disc) > abs(l1):
        l1 = mid - disc
    if l1 == 0.0 + 0.0j:
        return l1, l1
    return l1, (a * d - b * c) / l1


@njit(cache=True, nogil=True)
def _hqr_kernel(h, tol, max_iter, out):
    """Eigenvalues of the upper Hessenberg h by single-shift complex QR (h is destroyed)."""
    n = h.shape[0]
    norm = 0.0
    for i in range(n):
        for j in range(n):
            if abs(h[i, j]) > norm:
                norm = abs(h[i, j])
    if norm == 0.0:
        for i in range(n):
            out[i] = 0.0 + 0.0j
        return 0
    hi = n - 1
    it = 0
    total = 0
    while hi >= 0:
        l = hi
        while l > 0:
            s = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if s == 0.0:
                s = norm
            if abs(h[l, l - 1]) <= tol * s:
                h[l, l - 1] = 0.0 + 0.0j
                break
            l -= 1
        if l == hi:
            out[hi] = h[hi, hi]
            hi -= 1
            it = 0
            continue
        if l == hi - 1:
            l1, l2 = _eig2(h[l, l], h[l, hi], h[hi, l], h[hi, hi])
            out[l] = l1
            out[hi] = l2
            hi -= 2
            it = 0
            continue
        if it == max_iter:
            return -1
        it += 1
        total += 1
        if it % 10 == 0:
            shift = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            e1, e2 = _eig2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
            shift = e1
            if abs(e2 - h[hi, hi]) < abs(e1 - h[hi, hi]):
                shift = e2
        x = h[l, l] - shift
        y = h[l + 1, l]
        for k in range(l, hi):
            if k > l:
                x = h[k, k - 1]
                y = h[k + 1, k - 1]
            r = math.sqrt(x.real * x.real + x.imag * x.imag + y.real * y.real + y.imag * y.imag)
            c = 1.0 + 0.0j
            s = 0.0 + 0.0j
            if r > 0.0:
                c = x / r
                s = y / r
            cc = c.conjugate()
            sc = s.conjugate()
            for j in range(max(l, k - 1), hi + 1):
                t1 = h[k, j]
                t2 = h[k + 1, j]
                h[k, j] = cc * t1 + sc * t2
                h[k + 1, j] = -s * t1 + c * t2
            for i in range(l, min(k + 2, hi) + 1):
                t1 = h[i, k]
                t2 = h[i, k + 1]
                h[i, k] = t1 * c + t2 * s
                h[i, k + 1] = -t1 * sc + t2 * cc
            if k > l:
                h[k + 1, k - 1] = 0.0 + 0.0j
    return total


def sort_spectrum(values: np.ndarray) -> np.ndarray:
    """Ascending by real part, ties by imaginary part."""
    values = np.asarray(values, dtype=np.complex128)
    return values[np.lexsort((values.imag, values.real))]


def eig_sym_tridiag(m: SymTridiagMatrix, tol: float = EPS, max_iter: int = 30) -> np.ndarray:
    """All eigenvalues of m, ascending."""
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    d = m.diag.copy()
    e = np.zeros(m.n)
    e[: m.n - 1] = m.offdiag
    status = _tql_kernel(d, e, max(tol, EPS), int(max_iter))
    if status < 0:
        raise NoConvergence(f"QL did not deflate within {max_iter} sweeps (n={m.n})")
    logger.debug("QL converged: n=%d, %d sweeps", m.n, status)
    return np.sort(d)


def eig_sym_tridiag_lowest(m: SymTridiagMatrix, k: int, tol: float = 0.0) -> np.ndarray:
    """The k lowest eigenvalues of m by Sturm bisection, ascending; tol is relative."""
    if not 1 <= k <= m.n:
        raise InvalidParameter(f"k must be in [1, {m.n}], got {k}")
    out = np.empty(k)
    steps = _bisect_kernel(m.diag, m.offdiag, int(k), max(float(tol), 2.0 * EPS), out)
    logger.debug("Bisection: n=%d, k=%d, %d Sturm counts", m.n, k, steps)
    return out


def eig_dense_complex(m: DenseComplexMatrix, tol: float = EPS, max_iter: int = 60) -> np.ndarray:
    """All eigenvalues of m sorted by (real, imaginary) part."""
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    h = m.entries.copy()
    _hessenberg_kernel(h)
    out = np.empty(m.n, dtype=np.complex128)
    status = _hqr_kernel(h, max(tol, EPS), int(max_iter), out)
    if status < 0:
        raise NoConvergence(f"complex QR did not deflate within {max_iter} iterations (n={m.n})")
    logger.debug("Complex QR converged: n=%d, %d iterations", m.n, status)
    return sort_spectrum(out)
