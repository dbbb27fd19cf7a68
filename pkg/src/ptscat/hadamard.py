"""Hadamard (genus one) reconstruction of W and S+- from their zeros.

A model is

    F(z) = pre(z) * exp(c0 + c1 z + c2 z^2 + ... ) * prod_n (1 - z/Z_n) e^{z/Z_n}

with pre(z) = z^m for W and (-+1)^l z^l for S+-.  Only c0, c1 appear in the
exact factorization; the higher c_k absorb the truncated tail of the product
and are fitted, never derived.  Zero sets are symmetric under z -> -conj(z),
so every coefficient is written c_k = gamma_k (-i)^k with gamma_k real: the
model is then exactly conjugation-symmetric and real on the imaginary axis,
and fits can work with log-magnitudes only (no branch bookkeeping).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import pt_exact as pe
from . import specfun as sf
from .errors import DomainError, IllConditionedError, RegimeError
from .records import ZeroRecord

DEFAULT_TS = tuple(float(t) for t in np.geomspace(4.0, 40.0, 16))
TAIL_DEGREE = 4
BIAS_DEGREE = 3
L_RADIUS = 0.1
L_POINTS = 64


@dataclass(frozen=True)
class HadamardModel:
    target: str                     # "W", "S_plus" or "S_minus"
    zeros: tuple[complex, ...]      # nonzero zeros, repeated by multiplicity
    m_or_l: int
    a0_or_b0: complex
    a1_or_b1: complex
    truncation_N: int
    coeffs: tuple[complex, ...] = ()  # exponent polynomial c0, c1, c2, ...
    regime: str = ""
    fit_residual: float = 0.0
    consistency_residual: float | None = None

    def _prefactor(self, z: complex) -> complex:
        k = self.m_or_l
        if self.target == "S_plus":
            return (-1) ** k * z ** k
        return z ** k

    def log_abs(self, z: complex) -> float:
        z = complex(z)
        poly = sum(c * z ** k for k, c in enumerate(self.coeffs))
        pre = self._prefactor(z)
        return (math.log(abs(pre)) if pre != 0 else -math.inf) + poly.real + _log_product(z, self.zeros).real

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        poly = sum(c * z ** k for k, c in enumerate(self.coeffs))
        return self._prefactor(z) * np.exp(poly + _log_product(z, self.zeros))

    def to_json(self) -> dict:
        return {"target": self.target, "m_or_l": self.m_or_l,
                "a0_or_b0": [self.a0_or_b0.real, self.a0_or_b0.imag],
                "a1_or_b1": [self.a1_or_b1.real, self.a1_or_b1.imag],
                "coeffs": [[c.real, c.imag] for c in self.coeffs],
                "truncation_N": self.truncation_N, "regime": self.regime,
                "fit_residual": self.fit_residual, "consistency_residual": self.consistency_residual}


def _log_product(z: complex, zeros: Sequence[complex]) -> complex:
    if len(zeros) == 0:
        return 0j
    Z = np.asarray(zeros, dtype=complex)
    r = z / Z
    return complex(np.sum(np.log1p(-r) + r))


def _expand(zeros: Iterable) -> list[complex]:
    out = []
    for item in zeros:
        if isinstance(item, ZeroRecord):
            out += [complex(item.location)] * item.multiplicity
        elif isinstance(item, tuple):
            out += [complex(item[0])] * int(item[1])
        else:
            out.append(complex(item))
    return out


def _check_symmetric(zs: Sequence[complex], tol: float) -> None:
    pool = list(zs)
    for z in zs:
        if z not in pool:
            continue
        pool.remove(z)
        mirror = -z.conjugate()
        if abs(mirror - z) <= tol * (1 + abs(z)):
            continue
        dist = [abs(p - mirror) for p in pool]
        k = int(np.argmin(dist)) if dist else -1
        if k < 0 or dist[k] > tol * (1 + abs(z)):
            raise DomainError(f"zero list is not symmetric under z -> -conj(z) (at {z})")
        pool.pop(k)


def _split_zeros(zeros: Iterable, zero_tol: float, sym_tol: float) -> tuple[list[complex], int]:
    zs = _expand(zeros)
    at0 = sum(1 for z in zs if abs(z) < zero_tol)
    rest = sorted((z for z in zs if abs(z) >= zero_tol), key=abs)
    _check_symmetric(rest, sym_tol)
    return rest, at0


def _lsq(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    sc = np.abs(A).max(axis=0)
    sc[sc == 0] = 1.0
    g, *_ = np.linalg.lstsq(A / sc, b, rcond=None)
    g = g / sc
    return g, float(np.max(np.abs(A @ g - b))) if b.size else 0.0


def _quarter_phase(ratios: Sequence[complex]) -> float:
    """Mean phase of the ratios, snapped to a multiple of pi/2."""
    ph = np.angle(np.mean(np.asarray(ratios) / np.abs(ratios)))
    return float(round(ph / (math.pi / 2)) * (math.pi / 2))


def _coeffs_from_gamma(gamma: Sequence[float], phase: float) -> tuple[complex, ...]:
    cs = [complex(gamma[0], phase)]
    cs += [gamma[k] * (-1j) ** k for k in range(1, len(gamma))]
    return tuple(complex(c) for c in cs)


# ------------------------------------------------------------------- W

def fit_W(zeros: Iterable, probe_ts: Sequence[float] = DEFAULT_TS, tail_degree: int = TAIL_DEGREE,
          bias_degree: int = BIAS_DEGREE, zero_tol: float = 1e-9, sym_tol: float = 1e-6) -> HadamardModel:
    """Fit the exponent of the W product to the normalization W(it) ~ 2i(it)/Gamma(1+t)^2.

    The asymptotic relation is only approached like a series in 1/t, so the
    fit carries ``bias_degree`` inverse powers of t that are dropped from the
    model afterwards.
    """
    zs, m = _split_zeros(zeros, zero_tol, sym_tol)
    if m > 1:
        raise DomainError("W has at most a simple zero at 0")
    if len(zs) < 20:
        raise IllConditionedError("need at least 20 nonzero zeros")
    ts = np.asarray(sorted(probe_ts), dtype=float)
    if ts[0] <= 0 or ts[-1] / ts[0] < 10.0:
        raise IllConditionedError("probe points must span at least a decade on the positive axis")
    ks = list(range(tail_degree + 1)) + [-k for k in range(1, bias_degree + 1)]
    if ts.size < len(ks):
        raise IllConditionedError("fewer probe points than fit parameters")
    A = np.array([[t ** k for k in ks] for t in ts])
    b = np.array([math.log(2 * t) - 2 * sf.loggamma(1 + t).real - m * math.log(t)
                  - _log_product(1j * t, zs).real for t in ts])
    g, res = _lsq(A, b)
    ratios = [(2j * (1j * t)) / ((1j * t) ** m * np.exp(_log_product(1j * t, zs))) for t in ts]
    phase = _quarter_phase(ratios)
    coeffs = _coeffs_from_gamma(g[: tail_degree + 1], phase)
    return HadamardModel("W", tuple(zs), m, coeffs[0], coeffs[1] if len(coeffs) > 1 else 0j,
                         len(zs), coeffs, "EquivW", res)


# ------------------------------------------------------------------- S

def product_identity_rhs(W: Callable[[complex], complex], z: complex) -> complex:
    """W(z)W(-z) - 4 z^2 / (Gamma(1-iz) Gamma(1+iz))^2, which equals S(z)S(-z)."""
    z = complex(z)
    g = sf.rgamma(1 - 1j * z) * sf.rgamma(1 + 1j * z)
    return W(z) * W(-z) - 4 * z * z * g * g


def detect_l(W: Callable[[complex], complex], radius: float = L_RADIUS, points: int = L_POINTS) -> int:
    """Order l of the zero of S at 0, from the order-2l zero of the product identity."""
    th = 2 * np.pi * np.arange(points + 1) / points
    vals = np.array([product_identity_rhs(W, radius * np.exp(1j * t)) for t in th])
    wind = np.sum(np.angle(vals[1:] / vals[:-1])) / (2 * np.pi)
    n = int(round(wind))
    if abs(wind - n) > 0.1 or n % 2:
        raise DomainError(f"product identity winds {wind:.3f} times around 0; expected an even integer")
    return n // 2


def _even_part_points(zs: Sequence[complex], radii=(0.75, 1.25, 1.75, 2.25, 2.75), per: int = 12):
    pts = []
    for r in radii:
        for k in range(per):
            z = r * np.exp(1j * (2 * np.pi * (k + 0.5) / per))
            if all(abs(z - Z) > 0.15 and abs(z + Z) > 0.15 for Z in zs):
                pts.append(complex(z))
    return pts


def fit_S(zeros: Iterable, side: int = +1, support_hint: str = "origin_inside", lam: float | None = None,
          W: Callable[[complex], complex] | None = None, p_sign: int | None = None,
          anchors: Sequence[tuple[complex, complex]] = (), probe_ns: Sequence[int] = tuple(range(2, 14)),
          tail_degree: int = TAIL_DEGREE, bias_degree: int = BIAS_DEGREE, eigenvalues: Sequence[complex] = (),
          zero_tol: float = 1e-9, sym_tol: float = 1e-6) -> HadamardModel:
    """Hadamard model of S+ (side=+1) or S- (side=-1).

    Regimes:
      (i)   supp q on the far side (R_minus for S+, R_plus for S-): exponent
            fitted to the limit S(i(4n+1)/2) -> S0(lambda) (needs ``lam``).
      (ii)  no half-bound state and no eigenvalue off iN: b0 from W(0) = -S(0),
            even part of the exponent from the product identity (needs ``W``).
            The odd part, b1 included, is a pure translation; it is taken as
            zero (no shift) unless ``anchors`` (z, S(z)) are given.
      (iii) otherwise the sign datum ``p_sign`` = sign(i^l e^{b0}) is required.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    if support_hint not in ("origin_inside", "R_minus", "R_plus"):
        raise ValueError("support_hint must be origin_inside, R_minus or R_plus")
    zs, l0 = _split_zeros(zeros, zero_tol, sym_tol)
    target = "S_plus" if side == 1 else "S_minus"
    l = detect_l(W) if W is not None else l0
    far = (support_hint == "R_minus" and side == 1) or (support_hint == "R_plus" and side == -1)
    if far:
        if lam is None:
            raise RegimeError("regime (i) needs lambda for the S0 limit")
        return _fit_S_axis(zs, l, target, side, lam, probe_ns, tail_degree, bias_degree)
    if W is None:
        raise RegimeError("regimes (ii)/(iii) need W for the product identity")
    w0 = complex(W(0.0))
    halfbound = abs(w0) < 1e-10
    bad_eig = any(z.imag > 0 and not (abs(z.real) < 1e-8 and abs(z.imag - round(z.imag)) < 1e-8)
                  for z in map(complex, eigenvalues))
    regime = "ii"
    if halfbound or bad_eig:
        if p_sign not in (1, -1):
            raise RegimeError("regime (iii): supply p_sign = sign(i^l e^{b0})")
        regime = "iii"
    # even part of the exponent from |S(z) S(-z)|
    pts = _even_part_points(zs)
    evens = [k for k in range(0, tail_degree + 1, 2)]
    A = np.array([[2 * ((-1j * z) ** k).real for k in evens] for z in pts])
    b = np.array([math.log(abs(product_identity_rhs(W, z))) - 2 * l * math.log(abs(z))
                  - (_log_product(z, zs) + _log_product(-z, zs)).real for z in pts])
    g_even, res = _lsq(A, b)
    gamma = np.zeros(tail_degree + 1)
    gamma[evens] = g_even
    consistency = None
    if regime == "ii":
        # l = 0 here since W(0) = -S(0) != 0
        b0 = complex(np.log(complex(-w0)))
        consistency = abs(b0.real - g_even[0])
        gamma[0] = b0.real
        phase = b0.imag
    else:
        phase = (0.0 if p_sign == 1 else math.pi) - l * math.pi / 2
    if anchors:
        odds = [k for k in range(1, tail_degree + 1, 2)]
        base = [np.log(complex(s)) - np.log(_pre(target, l, z)) - _log_product(z, zs)
                - sum(gamma[k] * (-1j * z) ** k for k in evens) - 1j * phase for z, s in anchors]
        Ao = np.array([[((-1j * complex(z)) ** k).real for k in odds] for z, _ in anchors])
        bo = np.array([v.real for v in base])
        g_odd, res_odd = _lsq(Ao, bo)
        gamma[odds] = g_odd
        consistency = max(consistency or 0.0, res_odd)
    coeffs = _coeffs_from_gamma(gamma, phase)
    c1 = coeffs[1] if len(coeffs) > 1 else 0j
    b1 = -c1 if side == 1 else c1
    return HadamardModel(target, tuple(zs), l, coeffs[0], b1, len(zs), coeffs, regime, res, consistency)


def _pre(target: str, l: int, z: complex) -> complex:
    return ((-1) ** l if target == "S_plus" else 1) * complex(z) ** l


def _fit_S_axis(zs, l, target, side, lam, probe_ns, tail_degree, bias_degree) -> HadamardModel:
    S0 = pe.S0(pe.PTParams(lam)).real
    ts = np.array([(4 * n + 1) / 2 for n in probe_ns], dtype=float)
    ks = list(range(tail_degree + 1)) + [-k for k in range(1, bias_degree + 1)]
    if ts.size < len(ks):
        raise IllConditionedError("fewer probe points than fit parameters")
    A = np.array([[t ** k for k in ks] for t in ts])
    b = np.array([math.log(abs(S0)) - l * math.log(t) - _log_product(1j * t, zs).real for t in ts])
    g, res = _lsq(A, b)
    ratios = [S0 / (_pre(target, l, 1j * t) * np.exp(_log_product(1j * t, zs))) for t in ts]
    coeffs = _coeffs_from_gamma(g[: tail_degree + 1], _quarter_phase(ratios))
    c1 = coeffs[1] if len(coeffs) > 1 else 0j
    b1 = -c1 if side == 1 else c1
    return HadamardModel(target, tuple(zs), l, coeffs[0], b1, len(zs), coeffs, "i", res)


def relative_errors(model: HadamardModel, truth: Callable[[complex], complex],
                    probes: Sequence[complex]) -> list[float]:
    return [abs(model(z) / truth(z) - 1) for z in probes]


__all__ = ["HadamardModel", "fit_W", "fit_S", "detect_l", "product_identity_rhs", "relative_errors",
           "DEFAULT_TS"]
