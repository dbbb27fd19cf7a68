"""Complex special functions: Gamma, the Gauss series and its regularized form.

Gamma uses a 9-term Lanczos sum (g = 7) with reflection below Re z = 1/2.
The hypergeometric series is summed term by term until three consecutive
terms fall under 1e-16 of the running sum (and n >= 8); the summation loop
lives in the compiled core when available.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import AccuracyLossError, DegenerateError, DomainError, PoleError, RegimeError

__all__ = [
    "Hyp2F1Args", "gamma", "loggamma", "rgamma", "reflection_gamma", "sinpi", "cospi", "series",
    "hyp2f1", "hyp2f1_regularized", "hyp2f1_derivative", "gauss_half", "kummer_connect",
    "kummer_basis", "freg", "wagner_regime", "hyp2f1_large_c", "DegenerateError",
]

_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

SERIES_EPS = 1e-16
SERIES_NMIN = 8
SERIES_CAP = 20000
ZETA_MAX = 0.99
POLE_TOL = 1e-14


@dataclass(frozen=True)
class Hyp2F1Args:
    a: complex
    b: complex
    c: complex
    zeta: complex


def _as_complex_array(z):
    arr = np.asarray(z, dtype=np.complex128)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return complex(arr) if scalar else arr


def _nearest_nonpositive_int(z: np.ndarray) -> np.ndarray:
    n = np.round(z.real)
    return (n <= 0) & (np.abs(z - n) < POLE_TOL)


def _lg_right(z: np.ndarray) -> np.ndarray:
    """log Gamma for Re z >= 1/2 (branch continuous in that half-plane)."""
    zm = z - 1.0
    x = np.full(zm.shape, _LANCZOS[0], dtype=np.complex128)
    for k in range(1, len(_LANCZOS)):
        x = x + _LANCZOS[k] / (zm + k)
    t = zm + _G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(x)


def sinpi(z):
    """sin(pi z) with exact zeros at the integers."""
    arr, scalar = _as_complex_array(z)
    n = np.round(arr.real)
    s = np.sin(np.pi * (arr - n))
    s = np.where(np.mod(n, 2) == 1, -s, s)
    return _out(s, scalar)


def cospi(z):
    """cos(pi z) with exact zeros at the half-integers."""
    arr, scalar = _as_complex_array(z)
    return _out(sinpi(arr + 0.5), scalar)


def loggamma(z):
    """A logarithm of Gamma; principal on the positive real axis.

    For Re z < 1/2 the reflected value may differ from the principal branch by
    a multiple of 2 pi i, which is harmless for exponentiation.
    """
    arr, scalar = _as_complex_array(z)
    if np.any(_nearest_nonpositive_int(arr)):
        raise PoleError("loggamma pole at a non-positive integer")
    out = np.empty_like(arr)
    right = arr.real >= 0.5
    out[right] = _lg_right(arr[right])
    left = ~right
    if np.any(left):
        zl = arr[left]
        out[left] = math.log(math.pi) - np.log(sinpi(zl)) - _lg_right(1.0 - zl)
    return _out(out, scalar)


def gamma(z):
    """Gamma(z); relative error near 1e-15 on |z| <= 50."""
    arr, scalar = _as_complex_array(z)
    if np.any(_nearest_nonpositive_int(arr)):
        raise PoleError("gamma pole at a non-positive integer")
    out = np.empty_like(arr)
    right = arr.real >= 0.5
    out[right] = np.exp(_lg_right(arr[right]))
    left = ~right
    if np.any(left):
        zl = arr[left]
        out[left] = np.pi / (sinpi(zl) * np.exp(_lg_right(1.0 - zl)))
    return _out(out, scalar)


def rgamma(z):
    """1/Gamma(z), entire; exact zeros at the non-positive integers."""
    arr, scalar = _as_complex_array(z)
    out = np.empty_like(arr)
    right = arr.real >= 0.5
    out[right] = np.exp(-_lg_right(arr[right]))
    left = ~right
    if np.any(left):
        zl = arr[left]
        s = sinpi(zl)
        nz = s != 0
        vals = np.zeros_like(zl)
        # past |z| ~ 170 the value itself overflows; return inf without warnings
        with np.errstate(over="ignore", invalid="ignore"):
            vals[nz] = np.exp(np.log(s[nz]) + _lg_right(1.0 - zl[nz])) / np.pi
        out[left] = vals
    return _out(out, scalar)


def reflection_gamma(z):
    """pi / sin(pi z), i.e. Gamma(z) Gamma(1 - z)."""
    arr, scalar = _as_complex_array(z)
    if np.any(np.abs(arr - np.round(arr.real)) < POLE_TOL):
        raise PoleError("reflection_gamma pole at an integer")
    return _out(np.pi / sinpi(arr), scalar)


# ---------------------------------------------------------------- series core

def _head(a: complex, b: complex, c: complex, regularized: bool) -> np.ndarray:
    """Coefficients up to the index where the plain ratio recurrence is safe."""
    if not regularized:
        return np.array([1.0 + 0.0j])
    shift = max(0, int(math.ceil(1.0 - c.real)))
    r = np.empty(shift + 1, dtype=np.complex128)
    r[shift] = rgamma(c + shift)
    for n in range(shift - 1, -1, -1):
        r[n] = r[n + 1] * (c + n)
    head = np.empty(shift + 1, dtype=np.complex128)
    p = 1.0 + 0.0j
    for n in range(shift + 1):
        head[n] = p * r[n]
        p = p * (a + n) * (b + n) / (n + 1)
    return head


def series(a: complex, b: complex, c: complex, zeta, regularized: bool = False):
    """Sum the Gauss series (plain or regularized) and its zeta-derivative.

    ``zeta`` may be an array; returns ``(value, derivative)`` of the same shape.
    """
    a, b, c = complex(a), complex(b), complex(c)
    arr, scalar = _as_complex_array(zeta)
    if arr.size and np.max(np.abs(arr)) > ZETA_MAX:
        raise DomainError(f"|zeta| > {ZETA_MAX}: series too close to its radius")
    if not regularized:
        n = round(c.real)
        if n <= 0 and abs(c - n) < 1e-12:
            raise PoleError("c at a non-positive integer; use the regularized series")
    head = _head(a, b, c, regularized)
    flat = np.ascontiguousarray(arr.ravel())
    val, dval, nt = _backend.hyp_series(a, b, c, flat, head, SERIES_EPS,
                                        max(SERIES_NMIN, len(head)), SERIES_CAP)
    if np.any(nt < 0):
        raise AccuracyLossError("hypergeometric series hit the term cap")
    val = val.reshape(arr.shape)
    dval = dval.reshape(arr.shape)
    if scalar:
        return complex(val), complex(dval)
    return val, dval


def hyp2f1(args: Hyp2F1Args) -> complex:
    """F(a, b, c; zeta) by direct summation."""
    return series(args.a, args.b, args.c, args.zeta)[0]


def hyp2f1_regularized(args: Hyp2F1Args) -> complex:
    """F(a, b, c; zeta)/Gamma(c), entire in c."""
    return series(args.a, args.b, args.c, args.zeta, regularized=True)[0]


def hyp2f1_derivative(args: Hyp2F1Args) -> complex:
    """dF/dzeta = (ab/c) F(a+1, b+1, c+1; zeta)."""
    if abs(args.c) == 0:
        raise PoleError("c = 0")
    a, b, c = complex(args.a), complex(args.b), complex(args.c)
    return a * b / c * series(a + 1, b + 1, c + 1, args.zeta)[0]


def gauss_half(a: complex, b: complex) -> complex:
    """F(a, b, (a+b+1)/2; 1/2) in closed form."""
    a, b = complex(a), complex(b)
    return math.sqrt(math.pi) * gamma(0.5 * (a + b + 1)) * rgamma(0.5 * (a + 1)) * rgamma(0.5 * (b + 1))


def _int_gap(d: complex, tol: float = 1e-12) -> bool:
    return abs(d - round(d.real)) < tol


def kummer_connect(args: Hyp2F1Args) -> tuple[complex, complex]:
    """Coefficients of F(a,b,c;z) on the basis at 1 - z.

    With f3 = F(a,b,a+b-c+1;1-z) and f4 = (1-z)^(c-a-b) F(c-a,c-b,c-a-b+1;1-z),
    F(a,b,c;z) = coef1 f3 + coef2 f4.
    """
    a, b, c = complex(args.a), complex(args.b), complex(args.c)
    d = c - a - b
    if _int_gap(d):
        raise DegenerateError("c - a - b is an integer (logarithmic case)")
    g = gamma(c)
    coef1 = g * gamma(d) * rgamma(c - a) * rgamma(c - b)
    coef2 = g * gamma(-d) * rgamma(a) * rgamma(b)
    return coef1, coef2


def kummer_basis(args: Hyp2F1Args) -> tuple[complex, complex]:
    """The pair (f3, f4) used by :func:`kummer_connect`, summed at 1 - zeta."""
    a, b, c = complex(args.a), complex(args.b), complex(args.c)
    y = 1.0 - complex(args.zeta)
    d = c - a - b
    f3 = series(a, b, 1.0 - d, y)[0]
    f4 = y ** d * series(c - a, c - b, 1.0 + d, y)[0]
    return f3, f4


def freg(a: complex, b: complex, c: complex, zeta, one_minus=None, switch: float = 0.9):
    """Regularized F and its zeta-derivative for real zeta in [0, 1).

    Entries above ``switch`` go through the connection formula at 1 - zeta
    (rewritten with reflection so no Gamma of large argument appears).  When
    c - a - b is within 1e-9 of an integer the connection formula is
    degenerate; the series is used directly as long as zeta <= 0.99.
    ``one_minus`` optionally carries 1 - zeta computed without cancellation.
    """
    a, b, c = complex(a), complex(b), complex(c)
    arr, scalar = _as_complex_array(zeta)
    val = np.empty_like(arr)
    dval = np.empty_like(arr)
    far = arr.real > switch
    d = c - a - b
    if np.any(far) and _int_gap(d, 1e-9):
        if np.max(np.abs(arr)) > ZETA_MAX:
            raise DegenerateError("zeta near 1 with an integer gap c - a - b")
        far = np.zeros(arr.shape, dtype=bool)
    near = ~far
    if np.any(near):
        val[near], dval[near] = series(a, b, c, arr[near], regularized=True)
    if np.any(far):
        if one_minus is None:
            y = 1.0 - arr[far]
        else:
            y = np.asarray(one_minus, dtype=np.complex128).reshape(arr.shape)[far]
        pref = np.pi / sinpi(d)
        g1, dg1 = series(a, b, 1.0 - d, y, regularized=True)
        g2, dg2 = series(c - a, c - b, 1.0 + d, y, regularized=True)
        k1 = rgamma(c - a) * rgamma(c - b)
        k2 = rgamma(a) * rgamma(b)
        yd = y ** d
        val[far] = pref * (k1 * g1 - k2 * yd * g2)
        # d/dzeta = -d/dy
        dval[far] = -pref * (k1 * dg1 - k2 * (d * yd / y * g2 + yd * dg2))
    if scalar:
        return complex(val), complex(dval)
    return val, dval


def wagner_regime(args: Hyp2F1Args, delta: float = 1e-3) -> int:
    """Index (1-4) of the first large-c regime that admits ``args``; 0 if none."""
    a, b, c, zeta = (complex(args.a), complex(args.b), complex(args.c), complex(args.zeta))
    for p in (a, b):
        if abs(p - round(p.real)) < 1e-14 and round(p.real) <= 0:
            return 1
    if zeta.real < 0.5:
        n = np.arange(0, -int(max(0.0, -c.real)) - 2, -1)
        if np.min(np.abs(c - n)) >= delta:
            return 2
        return 0
    argc = cmath.phase(c)
    if zeta.real == 0.5:
        return 3 if abs(argc) <= math.pi - delta else 0
    ln = math.log(abs(1.0 - 1.0 / zeta))
    base = cmath.phase(zeta) - cmath.phase(1.0 - zeta)
    if ln == 0.0:
        return 0
    a_minus = math.atan((base + math.pi) / ln)
    a_plus = math.atan((base - math.pi) / ln)
    lo, hi = a_minus - 0.5 * math.pi + delta, a_plus + 0.5 * math.pi - delta
    return 4 if lo <= argc <= hi else 0


def hyp2f1_large_c(args: Hyp2F1Args, m: int) -> complex:
    """First ``m`` terms of the series, the large-|c| asymptotic expansion."""
    if wagner_regime(args) == 0:
        raise RegimeError("c is outside every large-c regime")
    a, b, c, zeta = (complex(args.a), complex(args.b), complex(args.c), complex(args.zeta))
    total, term = 0.0 + 0.0j, 1.0 + 0.0j
    for n in range(m):
        total += term
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * zeta
    return total
