"""Plain result records shared by several modules."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

KINDS = ("eigenvalue", "resonance", "half_bound")


@dataclass(frozen=True)
class JostValue:
    """A Jost solution and its x-derivative (scalars or equal-shape arrays)."""
    value: Any
    dx: Any


@dataclass(frozen=True)
class ZeroRecord:
    location: complex
    multiplicity: int
    kind: str
    residual: float

    def to_json(self) -> dict:
        return {"re": self.location.real, "im": self.location.imag,
                "multiplicity": self.multiplicity, "kind": self.kind,
                "residual": self.residual}


def kind_of(z: complex, tol: float) -> str:
    if abs(z) < tol:
        return "half_bound"
    return "eigenvalue" if z.imag > 0 else "resonance"


@dataclass(frozen=True)
class ScatteringData:
    """Jost functions and scattering coefficients at one spectral point.

    T = 1/A and R+- = S+-/W are the normalized coefficients (entire numerators,
    defined off the zeros of W).  Tc = 2iz/w and Rc+- = s+-/w are the
    unnormalized ones; they and w, s+- are NaN on the Gamma-pole set i Z*,
    flagged by ``on_pole_set``.
    """
    z: complex
    w: complex
    s_plus: complex
    s_minus: complex
    W: complex
    S_plus: complex
    S_minus: complex
    T: complex
    R_plus: complex
    R_minus: complex
    Tc: complex
    Rc_plus: complex
    Rc_minus: complex
    on_pole_set: bool = False

    FIELDS = ("w", "s_plus", "s_minus", "W", "S_plus", "S_minus", "T", "R_plus", "R_minus",
              "Tc", "Rc_plus", "Rc_minus")

    def unitarity_residual(self) -> float:
        """| |T|^2 + |R-|^2 - 1 |; meaningful on the real axis only."""
        return abs(abs(self.T) ** 2 + abs(self.R_minus) ** 2 - 1.0)

    def to_json(self) -> dict:
        out = {"z_re": self.z.real, "z_im": self.z.imag, "on_pole_set": self.on_pole_set}
        for name in self.FIELDS:
            v = getattr(self, name)
            out[name + "_re"] = v.real
            out[name + "_im"] = v.imag
        return out


def on_pole_set(z: complex, tol: float = 1e-12) -> bool:
    """True when z is (numerically) in i Z \\ {0}."""
    k = round(z.imag)
    return k != 0 and abs(z.real) < tol and abs(z.imag - k) < tol


def _safe_div(a: complex, b: complex) -> complex:
    return a / b if b != 0 else complex(math.inf, math.inf)


def from_normalized(z: complex, W: complex, Sp: complex, Sm: complex) -> ScatteringData:
    """Fill unnormalized fields and both coefficient sets from W and S+-."""
    from .specfun import gamma, rgamma

    z = complex(z)
    rg1 = rgamma(1 - 1j * z)
    rg2 = rgamma(1 + 1j * z)
    T = _safe_div(2j * z * rg1 * rg2, W)
    Rp = _safe_div(Sp, W)
    Rm = _safe_div(Sm, W)
    if on_pole_set(z):
        nan = complex(math.nan, math.nan)
        return ScatteringData(z, nan, nan, nan, W, Sp, Sm, T, Rp, Rm, nan, nan, nan, True)
    g1 = gamma(1 - 1j * z)
    g2 = gamma(1 + 1j * z)
    w = W * g1 * g1
    ratio = g2 * rg1
    return ScatteringData(z, w, Sp * g1 * g2, Sm * g1 * g2, W, Sp, Sm, T, Rp, Rm,
                          _safe_div(2j * z, w), Rp * ratio, Rm * ratio, False)
