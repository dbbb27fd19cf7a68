"""Unperturbed Poschl-Teller layer: closed-form Jost solutions and Jost functions.

With mu = sqrt(1/4 - lambda) (positive imaginary when lambda > 1/4) and
c = 1 - iz, the right Jost solution is

    f0+(x, z) = exp(izx) F(1/2 - mu, 1/2 + mu, c; zeta),  zeta = 1/(1 + e^{2x}),

and f0-(x, z) = f0+(-x, z).  The normalized solutions replace F by the
regularized series (division by Gamma(c)), which is entire in z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import specfun as sf
from .errors import DomainError, PoleError
from .records import JostValue, ScatteringData, ZeroRecord, from_normalized, kind_of, on_pole_set


DEGENERATE_NUDGE = 1e-9


def pt_sqrt(x: float) -> complex:
    """sqrt with the convention sqrt(x) = i sqrt(-x) for x < 0."""
    return complex(math.sqrt(x)) if x >= 0 else 1j * math.sqrt(-x)


@dataclass(frozen=True)
class PTParams:
    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam == 0.0:
            raise DomainError("lambda must be a nonzero real number")

    @property
    def mu(self) -> complex:
        return pt_sqrt(0.25 - self.lam)


@dataclass(frozen=True)
class ABCTriple:
    a: complex
    b: complex
    c: complex


def abc(params: PTParams, z: complex) -> ABCTriple:
    mu = params.mu
    z = complex(z)
    return ABCTriple(0.5 - 1j * z + mu, 0.5 - 1j * z - mu, 1 - 1j * z)


def zeta_pair(x):
    """(zeta, 1 - zeta) at x, each without cancellation."""
    x = np.asarray(x, dtype=float)
    return expit(-2.0 * x), expit(2.0 * x)


def jost0_plus(params: PTParams, x, z: complex, normalized: bool = False) -> JostValue:
    """f0+ and its x-derivative; ``x`` may be an array."""
    z = complex(z)
    mu = params.mu
    c = 1 - 1j * z
    xs = np.asarray(x, dtype=float)
    zeta, omz = zeta_pair(xs)
    try:
        F, dF = sf.freg(0.5 - mu, 0.5 + mu, c, zeta, one_minus=omz)
    except sf.DegenerateError:
        # z on i Z with zeta near 1: nudge off the logarithmic case
        cn = 1 - 1j * (z + DEGENERATE_NUDGE * (1 + abs(z)))
        F, dF = sf.freg(0.5 - mu, 0.5 + mu, cn, zeta, one_minus=omz)
    if not normalized:
        if abs(c - round(c.real)) < 1e-12 and round(c.real) <= 0:
            raise PoleError("unnormalized f0+ has a pole at z in -iN*; use normalized=True")
        g = sf.gamma(c)
        F, dF = F * g, dF * g
    e = np.exp(1j * z * xs)
    val = e * F
    der = 1j * z * val + e * dF * (-2.0 * zeta * omz)
    if xs.ndim == 0:
        return JostValue(complex(val), complex(der))
    return JostValue(val, der)


def jost0_minus(params: PTParams, x, z: complex, normalized: bool = False) -> JostValue:
    """f0-(x, z) = f0+(-x, z); derivative picks up a sign."""
    jv = jost0_plus(params, -np.asarray(x, dtype=float), z, normalized)
    return JostValue(jv.value, -jv.dx)


def wronskian(f: JostValue, g: JostValue):
    """[f, g] = f g' - f' g."""
    return f.value * g.dx - f.dx * g.value


def W0(params: PTParams, z: complex) -> complex:
    """Normalized Jost function w0 / Gamma(1 - iz)^2 (entire)."""
    t = abc(params, z)
    return -2.0 * sf.rgamma(t.a) * sf.rgamma(t.b)


def S0(params: PTParams, z: complex = 0.0) -> complex:
    """Normalized s0+- (the same on both sides and constant in z)."""
    mu = params.mu
    return 2.0 * sf.rgamma(0.5 - mu) * sf.rgamma(0.5 + mu)


def _check_pole(z: complex) -> None:
    if on_pole_set(complex(z)):
        raise PoleError("unnormalized Jost functions have poles on i Z*")


def w0(params: PTParams, z: complex) -> complex:
    """2iz Gamma(c-1) Gamma(c) / (Gamma(a) Gamma(b))."""
    _check_pole(z)
    return W0(params, z) * sf.gamma(1 - 1j * complex(z)) ** 2


def s0(params: PTParams, z: complex, side: int = +1) -> complex:
    """2iz Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b)); ``side`` is +1 or -1."""
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    _check_pole(z)
    z = complex(z)
    return S0(params) * sf.gamma(1 - 1j * z) * sf.gamma(1 + 1j * z)


def scattering0(params: PTParams, z: complex) -> ScatteringData:
    """T0 = 2iz/w0, R0+- = s0+-/w0 and the normalized W0, S0+-."""
    Wz = W0(params, z)
    if abs(Wz) == 0.0:
        raise ZeroDivisionError("z is a zero of w0")
    s = S0(params)
    return from_normalized(complex(z), Wz, s, s)


def resonances_closed_form(params: PTParams, n_max: int, tol: float = 1e-12) -> list[ZeroRecord]:
    """Zeros -i(n + 1/2 +- mu) of W0 for n <= n_max, coincident points merged.

    Multiplicities count every index pair landing on the same point, so the
    double zeros at lambda = 1/4 (and the overlaps of the two families when
    2 mu is an integer) are reported once with multiplicity 2.
    """
    mu = params.mu
    extra = int(math.ceil(2 * abs(mu))) + 2
    pts = []
    for n in range(n_max + 1 + extra):
        for sgn in (1, -1):
            pts.append((n, -1j * (n + 0.5 + sgn * mu)))
    listed = [p for n, p in pts if n <= n_max]
    merged: list[list] = []
    for p in listed:
        for m in merged:
            if abs(m[0] - p) < tol:
                break
        else:
            mult = sum(1 for _, q in pts if abs(q - p) < tol)
            merged.append([p, mult])
    out = [ZeroRecord(complex(p), mult, kind_of(complex(p), tol), _step_residual(params, p, mult))
           for p, mult in merged]
    out.sort(key=lambda r: (-r.location.imag, r.location.real))
    return out


def _log_W0(params: PTParams, z: complex) -> complex:
    t = abc(params, z)
    return math.log(2.0) - sf.loggamma(t.a) - sf.loggamma(t.b)


def _step_residual(params: PTParams, z: complex, mult: int) -> float:
    """Newton step m |W0| / |W0'|, in log space so large |z| does not overflow."""
    h = 1e-6 * (1 + abs(z))
    try:
        l0 = _log_W0(params, z)
    except PoleError:
        return 0.0  # W0 vanishes exactly
    try:
        ratio = (np.exp(_log_W0(params, z + h) - l0) - np.exp(_log_W0(params, z - h) - l0)) / (2 * h)
    except PoleError:
        return 0.0
    return math.inf if ratio == 0 else float(mult / abs(ratio))


def cylinder_lambda(k: int, d: int) -> float:
    """Coupling of spherical-harmonic mode k on a d-dimensional hyperbolic cylinder."""
    if d < 2 or k < 0:
        raise ValueError("need d >= 2 and k >= 0")
    return k * (k + d - 2) + (d - 1) * (3 - d) / 4.0


def mu_branch_ok(params: PTParams) -> bool:
    """mu^2 + lambda = 1/4 and the branch sits on [0, inf) or i(0, inf)."""
    mu = params.mu
    good = abs(mu * mu + params.lam - 0.25) < 1e-14 * max(1.0, abs(params.lam))
    if params.lam <= 0.25:
        return good and mu.imag == 0.0 and mu.real >= 0.0
    return good and mu.real == 0.0 and mu.imag > 0.0


__all__ = [
    "PTParams", "ABCTriple", "abc", "jost0_plus", "jost0_minus", "wronskian", "W0", "S0",
    "w0", "s0", "scattering0", "resonances_closed_form", "cylinder_lambda", "pt_sqrt",
    "zeta_pair", "mu_branch_ok",
]
