"""Pure numpy twin of the compiled series kernel in ``_accel.pyx``."""
from __future__ import annotations

import numpy as np


def hyp_series(a: complex, b: complex, c: complex, zeta: np.ndarray, head: np.ndarray,
               eps: float, nmin: int, cap: int):
    zeta = np.ascontiguousarray(zeta, dtype=np.complex128)
    m = zeta.size
    out = np.empty(m, dtype=np.complex128)
    dout = np.empty(m, dtype=np.complex128)
    nt = np.full(m, -1, dtype=np.int64)
    if m == 0:
        return out, dout, nt
    zmax = float(np.max(np.abs(zeta)))
    if zmax > 0:
        guess = int(40.0 / max(-np.log(zmax), 1e-3))
    else:
        guess = 0
    nterms = min(cap + 1, max(guess + 2 * len(head) + 64, 64))
    while True:
        coef = _coefficients(a, b, c, head, nterms)
        n = np.arange(nterms)
        # powers via cumulative products keeps zeta**0 exact for zeta == 0
        pw = np.ones((m, nterms), dtype=np.complex128)
        if nterms > 1:
            pw[:, 1:] = np.cumprod(np.broadcast_to(zeta[:, None], (m, nterms - 1)), axis=1)
        terms = pw * coef[None, :]
        dterms = np.zeros_like(terms)
        dterms[:, 1:] = pw[:, :-1] * (coef[1:] * n[1:])[None, :]
        cs = np.cumsum(terms, axis=1)
        dcs = np.cumsum(dterms, axis=1)
        ok = (np.abs(terms) <= eps * np.abs(cs)) & (np.abs(dterms) <= eps * np.abs(dcs))
        ok[:, :nmin] = False
        run = ok[:, 2:] & ok[:, 1:-1] & ok[:, :-2]
        has = run.any(axis=1)
        first = np.argmax(run, axis=1) + 2
        idx = np.arange(m)
        out[has] = cs[idx[has], first[has]]
        dout[has] = dcs[idx[has], first[has]]
        nt[has] = first[has] + 1
        if has.all() or nterms > cap:
            miss = ~has
            out[miss] = cs[miss, -1]
            dout[miss] = dcs[miss, -1]
            return out, dout, nt
        nterms = min(cap + 1, 2 * nterms)


def _coefficients(a: complex, b: complex, c: complex, head: np.ndarray, nterms: int) -> np.ndarray:
    coef = np.empty(nterms, dtype=np.complex128)
    nh = min(len(head), nterms)
    coef[:nh] = head[:nh]
    if nterms > nh:
        n = np.arange(nh, nterms)
        ratio = (a + n - 1) * (b + n - 1) / (n * (c + n - 1))
        coef[nh:] = coef[nh - 1] * np.cumprod(ratio)
    return coef
