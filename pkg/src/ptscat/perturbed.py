"""Perturbed Jost solutions, Jost functions and scattering data.

Normalized solutions are built from the kernels,

    f+(x, z) = f0+(x, z) + int_x^{2 beta - x} K+(x, t) f0+(t, z) dt,

with the mirror identity f-(x, z) = f~+(-x, z) for q~(y) = q(-y), so only the
plus-side integral is implemented.  On a kernel node line x = beta - m h the
integrand is resolved by Gauss-Legendre panels between breakpoint kinks, with
K read off the line through local degree-7 Lagrange interpolation.  Off-line x
are reached by a short RK4 leg; x outside the support by matching to the
unperturbed basis.
"""
from __future__ import annotations

import math
import warnings
from typing import Callable, Iterable

import numpy as np

from . import pt_exact as pe
from . import specfun as sf
from .errors import DomainError, PtscatError
from .kernel import KernelGrid, PerturbationSpec, solve_kernel
from .records import JostValue, ScatteringData, from_normalized

GL_ORDER = 16
INTERP_POINTS = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class UnderResolvedWarning(RuntimeWarning):
    pass


class ZSetError(PtscatError, ValueError):
    """A Weyl-Titchmarsh denominator vanishes."""


def density_level(zabs: float) -> int:
    return max(0, int(math.ceil(math.log2(1.0 + zabs))))


def _lagrange_weights(s: np.ndarray, npts: int) -> np.ndarray:
    """Weights of the equispaced nodes 0..npts-1 at fractional positions s."""
    w = np.ones((s.size, npts))
    for k in range(npts):
        for l in range(npts):
            if l != k:
                w[:, k] *= (s - l) / (k - l)
    return w


def _interp_segment(vals: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Interpolate equispaced samples (unit spacing) at positions s in [0, len-1]."""
    nn = vals.shape[0]
    npts = min(INTERP_POINTS, nn)
    start = np.clip(np.floor(s).astype(int) - (npts // 2 - 1), 0, nn - npts)
    w = _lagrange_weights(s - start, npts)
    idx = start[:, None] + np.arange(npts)[None, :]
    return np.einsum("qk,qk...->q...", w, vals[idx])


class LineQuadrature:
    """Gauss-Legendre nodes on one kernel line, with K and dK/dx there."""

    def __init__(self, K: KernelGrid, m: int, level: int):
        t, kv, hv, dv, kinks = K.line(m)
        x = K.beta - m * K.h
        self.x = x
        self.diag = 0.5 * K.q.integral(x, K.beta)
        if m == 0:
            self.t = np.zeros(0)
            self.w = np.zeros(0)
            self.k = np.zeros(0)
            self.dk = np.zeros(0)
            return
        panel = 4.0 / 2 ** level
        ts, ws, ks, dks = [], [], [], []
        stacked = np.stack([kv, hv, dv], axis=1)
        for j0, j1 in zip(kinks, kinks[1:]):
            a, b = t[j0], t[j1]
            npan = max(1, int(math.ceil((b - a) / panel)))
            edges = np.linspace(a, b, npan + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
            half = 0.5 * (edges[1:] - edges[:-1])[:, None]
            tq = (mid + half * _GL_X[None, :]).ravel()
            wq = (half * _GL_W[None, :]).ravel()
            s = (tq - a) / (2.0 * K.h)
            seg = _interp_segment(stacked[j0:j1 + 1], s)
            u = 0.5 * (x + tq)
            qu = K.q.eval(u, "avg")
            ts.append(tq)
            ws.append(wq)
            ks.append(seg[:, 0])
            # dK/dx = (du - dv)/2 with du = -q(u)/2 - H
            dks.append(0.5 * (-0.5 * qu - seg[:, 1] - seg[:, 2]))
        self.t = np.concatenate(ts)
        self.w = np.concatenate(ws)
        self.k = np.concatenate(ks)
        self.dk = np.concatenate(dks)


def _line(K: KernelGrid, m: int, zabs: float) -> LineQuadrature:
    key = (m, density_level(zabs))
    lq = K._cache.get(key)
    if lq is None:
        lq = LineQuadrature(K, m, key[1])
        K._cache[key] = lq
    return lq


def _f0(lam: float, x, z: complex) -> JostValue:
    return pe.jost0_plus(pe.PTParams(lam), x, z, normalized=True)


def _on_line(K: KernelGrid, m: int, z: complex) -> tuple[complex, complex]:
    """Normalized (f, f') in the solve frame on node line m."""
    lq = _line(K, m, abs(z))
    f0x = _f0(K.lam, lq.x, z)
    if lq.t.size == 0:
        return f0x.value, f0x.dx
    f0t = _f0(K.lam, lq.t, z).value
    wf = lq.w * f0t
    f = f0x.value + np.dot(lq.k, wf)
    df = f0x.dx - lq.diag * f0x.value + np.dot(lq.dk, wf)
    return complex(f), complex(df)


def _potential(K: KernelGrid, x: float, piece_side: str) -> float:
    return K.lam / math.cosh(x) ** 2 + float(K.q.eval(x, piece_side))


def _rk4_leg(K: KernelGrid, x_from: float, x_to: float, f: complex, df: complex, z: complex):
    """Integrate -f'' + (V - z^2) f = 0 across a breakpoint-free leg."""
    dist = x_to - x_from
    if dist == 0.0:
        return f, df
    scale = 1.0 + abs(z) + math.sqrt(abs(K.lam)) + math.sqrt(max(abs(c) for r in K.q.coefficients for c in r))
    nsteps = max(4, int(math.ceil(abs(dist) * scale / 0.01)))
    hs = dist / nsteps
    side = "left" if dist < 0 else "right"
    z2 = z * z

    def rhs(x, y0, y1):
        return y1, (_potential(K, x, side) - z2) * y0

    y0, y1 = f, df
    x = x_from
    for _ in range(nsteps):
        k1 = rhs(x, y0, y1)
        k2 = rhs(x + hs / 2, y0 + hs / 2 * k1[0], y1 + hs / 2 * k1[1])
        k3 = rhs(x + hs / 2, y0 + hs / 2 * k2[0], y1 + hs / 2 * k2[1])
        k4 = rhs(x + hs, y0 + hs * k3[0], y1 + hs * k3[1])
        y0 = y0 + hs / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y1 = y1 + hs / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        x += hs
    return y0, y1


def _match_outside(K: KernelGrid, x: float, z: complex, fa: complex, dfa: complex):
    """Continue a solution known at alpha to x < alpha using unperturbed solutions."""
    P = pe.PTParams(K.lam)
    a = K.alpha
    g1a = pe.jost0_plus(P, a, z, True)
    cands = [pe.jost0_minus(P, a, z, True), pe.jost0_plus(P, a, -z, True)]
    best, bw = None, 0.0
    for idx, g2a in enumerate(cands):
        wr = pe.wronskian(g1a, g2a)
        scale = (abs(g1a.value) + abs(g1a.dx)) * (abs(g2a.value) + abs(g2a.dx))
        rel = abs(wr) / scale if scale else 0.0
        if best is None or rel > bw:
            best, bw = (idx, g2a, wr), rel
    idx, g2a, wr = best
    fa_jv = JostValue(fa, dfa)
    c1 = pe.wronskian(fa_jv, g2a) / wr
    c2 = pe.wronskian(g1a, fa_jv) / wr
    g1 = pe.jost0_plus(P, x, z, True)
    g2 = pe.jost0_minus(P, x, z, True) if idx == 0 else pe.jost0_plus(P, x, -z, True)
    return c1 * g1.value + c2 * g2.value, c1 * g1.dx + c2 * g2.dx


def _line_ok(K: KernelGrid, m: int) -> bool:
    """Every smooth segment of line m has enough nodes for full-order interpolation."""
    kinks = K.line(m)[4]
    return all(b - a >= INTERP_POINTS - 1 for a, b in zip(kinks, kinks[1:]))


def _resolved_line(K: KernelGrid, m: int, x: float) -> int:
    """Nearest well-resolved line reachable from x without crossing a breakpoint."""
    ok = K._cache.setdefault("line_ok", {})
    lo_x = max((b for b in K.q.breakpoints if b <= x + 1e-12), default=-math.inf)
    hi_x = min((b for b in K.q.breakpoints if b >= x - 1e-12), default=math.inf)
    for d in range(0, 4 * INTERP_POINTS):
        for mm in (m - d, m + d + 1) if d else (m, m + 1):
            if not 0 <= mm <= K.n:
                continue
            xm = K.beta - mm * K.h
            if xm < lo_x - 1e-12 or xm > hi_x + 1e-12:
                continue
            if mm not in ok:
                ok[mm] = _line_ok(K, mm)
            if ok[mm]:
                return mm
    return m


def _solve_frame(K: KernelGrid, x: float, z: complex) -> tuple[complex, complex]:
    """Normalized plus-type solution (value, derivative) in the kernel's own frame."""
    x = float(x)
    if x >= K.beta:
        f0 = _f0(K.lam, x, z)
        return f0.value, f0.dx
    if x < K.alpha - 1e-12:
        fa, dfa = _on_line(K, K.n, z)
        return _match_outside(K, x, z, fa, dfa)
    frac = (K.beta - x) / K.h
    m = int(math.floor(frac + 1e-9))
    m = min(m, K.n)
    m = _resolved_line(K, m, x)
    f, df = _on_line(K, m, z)
    xm = K.beta - m * K.h
    if abs(xm - x) > 1e-12:
        f, df = _rk4_leg(K, xm, x, f, df, z)
    return f, df


def _check(K: KernelGrid, side: str, q: PerturbationSpec | None, lam: float | None) -> None:
    if K.side != side:
        raise DomainError(f"expected a {side}-side kernel")
    if lam is not None and float(lam) != K.lam:
        raise DomainError("kernel was solved for a different lambda")
    if q is not None:
        qq = q if side == "plus" else q.mirrored()
        if qq.key() != K.q.key():
            raise DomainError("kernel was solved for a different perturbation")


def _unnormalize(f: complex, df: complex, z: complex, normalized: bool) -> JostValue:
    if normalized:
        return JostValue(f, df)
    g = sf.gamma(1 - 1j * complex(z))
    return JostValue(f * g, df * g)


def jost_plus(q: PerturbationSpec | None, lam: float | None, Kp: KernelGrid, x: float, z: complex,
              normalized: bool = False) -> JostValue:
    """f+(x, z) and its x-derivative."""
    _check(Kp, "plus", q, lam)
    z = complex(z)
    f, df = _solve_frame(Kp, x, z)
    return _unnormalize(f, df, z, normalized)


def jost_minus(q: PerturbationSpec | None, lam: float | None, Km: KernelGrid, x: float, z: complex,
               normalized: bool = False) -> JostValue:
    """f-(x, z) and its x-derivative (through the mirrored kernel)."""
    _check(Km, "minus", q, lam)
    z = complex(z)
    f, df = _solve_frame(Km, -float(x), z)
    return _unnormalize(f, -df, z, normalized)


def quadrature_self_check(K: KernelGrid, m: int, z: complex) -> float:
    """Relative change of the line integral when the panel density doubles."""
    lq1 = LineQuadrature(K, m, density_level(abs(z)))
    lq2 = LineQuadrature(K, m, density_level(abs(z)) + 1)
    vals = []
    for lq in (lq1, lq2):
        if lq.t.size == 0:
            return 0.0
        vals.append(np.dot(lq.k, lq.w * _f0(K.lam, lq.t, z).value))
    return abs(vals[0] - vals[1]) / max(abs(vals[1]), 1e-300)


class Problem:
    """A (q, lambda) pair with both kernels, the usual entry point for W and S."""

    def __init__(self, q: PerturbationSpec, lam: float, grid_n: int = 256, tol: float = 1e-10,
                 levels: int = 2, Kp: KernelGrid | None = None, Km: KernelGrid | None = None):
        pe.PTParams(lam)
        self.q = q
        self.lam = float(lam)
        self.Kp = Kp if Kp is not None else solve_kernel(q, lam, "plus", grid_n, tol, levels)
        self.Km = Km if Km is not None else solve_kernel(q, lam, "minus", grid_n, tol, levels)

    def fplus(self, x: float, z: complex) -> tuple[complex, complex]:
        return _solve_frame(self.Kp, x, complex(z))

    def fminus(self, x: float, z: complex) -> tuple[complex, complex]:
        f, df = _solve_frame(self.Km, -float(x), complex(z))
        return f, -df

    def W(self, z: complex) -> complex:
        """Normalized W(z) = [f-, f+] at x = beta."""
        z = complex(z)
        b = self.q.beta
        fp = _f0(self.lam, b, z)
        fm, dfm = self.fminus(b, z)
        return fm * fp.dx - dfm * fp.value

    def S(self, z: complex, side: int = +1) -> complex:
        """Normalized S+(z) = [f+(., -z), f-(., z)]; S-(z) = S+(-z)."""
        z = complex(z) if side == 1 else -complex(z)
        b = self.q.beta
        fp = _f0(self.lam, b, -z)
        fm, dfm = self.fminus(b, z)
        return fp.value * dfm - fp.dx * fm

    def wronskians_at(self, x0: float, z: complex) -> tuple[complex, complex, complex]:
        """(W, S+, S-) with every solution evaluated at a general point x0."""
        z = complex(z)
        fp, dfp = self.fplus(x0, z)
        fpm, dfpm = self.fplus(x0, -z)
        fm, dfm = self.fminus(x0, z)
        fmm, dfmm = self.fminus(x0, -z)
        W = fm * dfp - dfm * fp
        Sp = fpm * dfm - dfpm * fm
        Sm = fp * dfmm - dfp * fmm
        return W, Sp, Sm

    def scattering(self, z: complex, x0: float | None = None) -> ScatteringData:
        z = complex(z)
        if x0 is None:
            return from_normalized(z, self.W(z), self.S(z, +1), self.S(z, -1))
        return from_normalized(z, *self.wronskians_at(x0, z))


def scattering(q: PerturbationSpec, lam: float, Kp: KernelGrid, Km: KernelGrid, z: complex,
               x0: float | None = None) -> ScatteringData:
    """ScatteringData at z; Wronskians at x0 = beta unless a point is given."""
    _check(Kp, "plus", q, lam)
    _check(Km, "minus", q, lam)
    return Problem(q, lam, Kp=Kp, Km=Km).scattering(z, x0)


def scattering_batch(problem: Problem, zs: Iterable[complex], threads: int = 1) -> list[ScatteringData]:
    zs = [complex(z) for z in zs]
    if threads <= 1:
        return [problem.scattering(z) for z in zs]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(problem.scattering, zs))


def weyl_titchmarsh_ratio(q: PerturbationSpec, lam: float, Kp: KernelGrid, Km: KernelGrid,
                          z: complex, eps: float = 1e-12) -> complex:
    """m-(z)/m+(z) with m+- = (f+-)'(0, z) / f+-(0, z)."""
    prob = Problem(q, lam, Kp=Kp, Km=Km)
    fp, dfp = prob.fplus(0.0, z)
    fm, dfm = prob.fminus(0.0, z)
    if min(abs(fp), abs(fm), abs(dfp)) < eps:
        raise ZSetError("z is (numerically) in the set where f-(0)(f+)'(0) vanishes")
    return (dfm / fm) / (dfp / fp)


def _int_abs2(fun: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int) -> float:
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = (mid + half * _GL_X[None, :]).ravel()
    w = (half * _GL_W[None, :]).ravel()
    return float(np.dot(w, np.abs(fun(x)) ** 2))


def norming_constant_check(q: PerturbationSpec, lam: float, k0: float, Kp: KernelGrid | None = None,
                           Km: KernelGrid | None = None, side: int = +1,
                           convention: str = "derived") -> tuple[float, float]:
    """(lhs, rhs) of the norming-constant / residue identity at z = i k0.

    lhs = int |f(x, i k0)|^2 dx for the normalized f = f+ (side=+1) or f-.
    With ``convention="derived"`` rhs = i S(i k0) W'(i k0) Gamma(1+k0) Gamma(1-k0) / (4 k0^2),
    pairing f+ with S- and f- with S+; ``convention="printed"`` uses squared
    Gamma factors and S of the same sign as f.  Integer k0 is rejected: there
    S Gamma(1 - k0) is an indeterminate 0 * inf.
    """
    if k0 <= 0:
        raise DomainError("k0 must be positive")
    if abs(k0 - round(k0)) < 1e-6:
        raise DomainError("integer k0: the identity degenerates (S Gamma(1-k0) is 0 * inf)")
    prob = Problem(q, lam, Kp=Kp, Km=Km)
    z = 1j * k0
    Wz = prob.W(z)
    dz = 1e-6 * (1 + abs(z))
    Wd = (prob.W(z + 1j * dz) - prob.W(z - 1j * dz)) / (2j * dz)
    scale = abs(Wd) * dz * 10 + 1e-300
    if abs(Wz) > max(1e-6, scale):
        raise DomainError("i k0 is not an eigenvalue (|W(i k0)| too large)")
    if convention == "derived":
        S = prob.S(z, -side)
        rhs = 1j * S * Wd * sf.gamma(1 + k0) * sf.gamma(1 - k0) / (4 * k0 ** 2)
    elif convention == "printed":
        S = prob.S(z, side)
        rhs = 1j * S * Wd * sf.gamma(1 + k0) ** 2 * sf.gamma(1 - k0) ** 2 / (4 * k0 ** 2)
    else:
        raise ValueError("convention must be 'derived' or 'printed'")
    lhs = _norm_integral(prob, k0, side)
    return lhs, float(rhs.real)


def _norm_integral(prob: Problem, k0: float, side: int) -> float:
    z = 1j * k0
    tail = 40.0 / k0 + 10.0
    K = prob.Kp if side == 1 else prob.Km
    lam = prob.lam
    # outer region where the solution is closed-form
    # the solve frame is the mirror image for f-, and |f|^2 integrates the same
    right = _int_abs2(lambda x: _f0(lam, x, z).value, K.beta, K.beta + tail, 64)
    # inside the support: node lines, composite Simpson between breakpoints
    n = K.n
    xs = K.beta - np.arange(n + 1) * K.h
    vals = np.array([abs(_on_line(K, m, z)[0]) ** 2 for m in range(n + 1)])
    from scipy.integrate import simpson
    inner = 0.0
    cuts = sorted({0, n, *[int(round((K.beta - xi) / K.h)) for xi in K.q.breakpoints]})
    for m0, m1 in zip(cuts, cuts[1:]):
        inner += simpson(vals[m0:m1 + 1][::-1], x=xs[m0:m1 + 1][::-1])
    # beyond the support on the decaying side: unperturbed basis matched at the edge
    # at an eigenvalue only the decaying f0- component survives past alpha; the
    # f0+ coefficient is rounding noise that grows like e^{k0 |x|}, so drop it
    fa, dfa = _on_line(K, n, z)
    P = pe.PTParams(lam)
    g = pe.jost0_minus(P, K.alpha, z, True)
    # least-squares fit on (f, f'); a Wronskian projection is 0/0 when f0+ and f0- are parallel
    c2 = (fa * np.conj(g.value) + dfa * np.conj(g.dx)) / (abs(g.value) ** 2 + abs(g.dx) ** 2)
    outer = abs(c2) ** 2 * _int_abs2(lambda x: pe.jost0_minus(P, x, z, True).value, K.alpha - tail, K.alpha, 64)
    return float(right + inner + outer)


def check_resolution(problem: Problem, z: complex, threshold: float = 1e-7) -> float:
    """Quadrature self-estimate on the longest minus line; warns above ``threshold``."""
    est = quadrature_self_check(problem.Km, problem.Km.n, complex(z))
    if est > threshold:
        warnings.warn(f"kernel quadrature self-estimate {est:.2e} at z={z}", UnderResolvedWarning)
    return est
