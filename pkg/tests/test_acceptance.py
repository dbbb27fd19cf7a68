"""One test per acceptance criterion; each records a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from ptscat import hadamard as hd
from ptscat import kernel as kn
from ptscat import pt_exact as pe
from ptscat import specfun as sf
from ptscat.asymptotics import match_branches, predict_log_branch
from ptscat.kernel import PerturbationSpec, solve_kernel
from ptscat.perturbed import Problem
from ptscat.resonances import SearchRegion, find_zeros, scan_sector

from oracle import f0_plus_mp, ode_jost

BOX = PerturbationSpec.box(-1.0, 1.0)
PROBES = [1 + 1j, -1 + 1j, 0.5, 2 - 0.5j, -1.5 - 1j, 0.3 + 2j, -0.7 - 0.2j, 1.2 + 0.4j,
          -2 + 1.5j, 0.1 - 1.3j]


@pytest.fixture(scope="module")
def box1():
    return Problem(BOX, 1.0)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_c1_unperturbed_resonances(verdict):
    t0 = time.perf_counter()
    err, mult_ok, count_ok = 0.0, True, True
    for lam in (0.2, 0.25, 1.0):
        P = pe.PTParams(lam)
        found = find_zeros(lambda z: pe.W0(P, z), SearchRegion((-2, 2, -5, 0)))
        exact = [r for r in pe.resonances_closed_form(P, 8) if r.location.imag > -5]
        count_ok &= len(found) == len(exact)
        for r in exact:
            k = int(np.argmin([abs(r.location - f.location) for f in found]))
            err = max(err, abs(r.location - found[k].location))
            mult_ok &= found[k].multiplicity == r.multiplicity
        if lam == 0.25:
            mult_ok &= all(f.multiplicity == 2 for f in found)
    dt = time.perf_counter() - t0
    verdict(1, count_ok and mult_ok and err <= 1e-8 and dt <= 60,
            f"max abs error {err:.2e} (<=1e-8), multiplicities ok={mult_ok}, {dt:.1f}s (<=60s)")


def test_c2_jost_oracle(verdict, box1):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    P = pe.PTParams(1.0)
    worst0 = worst = 0.0
    n = 0
    while n < 20:
        z = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
        if abs(z) > 5 or abs(z) < 0.1 or abs(z.real) < 1e-3:
            continue
        x = float(rng.uniform(-1.5, 1.5))
        n += 1
        # closed form vs mpmath (x and -x cover f0+ and f0-)
        g, dg = f0_plus_mp(1.0, x, z)
        f = pe.jost0_plus(P, x, z, True)
        worst0 = max(worst0, _rel(f.value, g), _rel(f.dx, dg))
        f = pe.jost0_minus(P, -x, z, True)
        worst0 = max(worst0, _rel(f.value, g), _rel(f.dx, -dg))
        # perturbed vs adaptive ODE
        for side in (1, -1):
            a, da = box1.fplus(x, z) if side > 0 else box1.fminus(x, z)
            b, db = ode_jost(BOX, 1.0, x, z, side)
            worst = max(worst, _rel(a, b), _rel(da, db))
    dt = time.perf_counter() - t0
    verdict(2, max(worst0, worst) <= 1e-6 and dt <= 30,
            f"closed form {worst0:.2e}, perturbed {worst:.2e} (<=1e-6), {dt:.1f}s (<=30s)")


def test_c3_identity_suite(verdict):
    t0 = time.perf_counter()
    pr = Problem(BOX, 1.0)
    rng = np.random.default_rng(3)
    worst = dict(conj=0.0, parity=0.0, unitarity=0.0, product=0.0, w0s0=0.0)
    k = 0
    while k < 200:
        r, th = 10 * math.sqrt(rng.random()), 2 * math.pi * rng.random()
        z = complex(r * math.cos(th), r * math.sin(th))
        if abs(z.real) < 1e-6 and abs(z.imag - round(z.imag)) < 1e-6:
            continue
        k += 1
        W, Wm, Wc = pr.W(z), pr.W(-z), pr.W(-z.conjugate())
        worst["conj"] = max(worst["conj"], _rel(Wc, W.conjugate()))
        _, _, Sm = pr.wronskians_at(0.3, z)
        Spm = pr.S(-z, 1)
        worst["parity"] = max(worst["parity"], _rel(Sm, Spm))
        g = (sf.rgamma(1 - 1j * z) * sf.rgamma(1 + 1j * z)) ** 2
        lhs, rhs = W * Wm - 4 * z * z * g, pr.S(z, 1) * Spm
        worst["product"] = max(worst["product"], abs(lhs - rhs) / max(abs(lhs), abs(rhs), abs(W * Wm)))
        worst["unitarity"] = max(worst["unitarity"], pr.scattering(z.real).unitarity_residual())
    W0 = pr.W(0)
    worst["w0s0"] = max(_rel(-pr.S(0, 1), W0), _rel(-pr.S(0, -1), W0))
    dt = time.perf_counter() - t0
    verdict(3, max(worst.values()) <= 1e-7 and dt <= 60,
            ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (<=1e-7), {dt:.1f}s (<=60s)")


def test_c4_kernel_identities(verdict, poly_q):
    t0 = time.perf_counter()
    Kp = solve_kernel(poly_q, 1.0, "plus")
    Km = solve_kernel(poly_q, 1.0, "minus")
    xs = Kp.beta - np.arange(0, Kp.n + 1, 5) * Kp.h
    diag = max(np.max(np.abs(Kp.value(xs, xs) - 0.5 * poly_q.integral(xs, poly_q.beta))),
               np.max(np.abs(Km.value(xs, xs) - 0.5 * poly_q.integral(poly_q.alpha, xs))))
    xo = np.linspace(poly_q.alpha, poly_q.beta, 21)
    outer = max(np.max(np.abs(Kp.value(xo, 2 * poly_q.beta - xo))),
                np.max(np.abs(Km.value(xo, 2 * poly_q.alpha - xo))))
    bound = kn.apriori_bound(poly_q, 1.0)
    bound_ok = bool(np.all(np.abs(Kp.values) <= bound) and np.all(np.abs(Km.values) <= bound))
    # jumps against the stated -q^{(p-1)}(beta-)/4
    jumps = []
    for q, p in ((BOX, 1), (PerturbationSpec((-1.0, 1.0), ((1.0, -1.0),)), 2)):
        K = solve_kernel(q, 1.0, "plus")
        stated = -0.25 * q.endpoint_derivative("beta", p - 1)
        jumps.append((p, kn.boundary_jump_grid(K, p), stated))
    jump_ok = all(abs(g - s) <= 0.1 * abs(s) for _, g, s in jumps)
    dt = time.perf_counter() - t0
    jtxt = "; ".join(f"p={p} grid {g:+.4f} vs {s:+.4f}" for p, g, s in jumps)
    verdict(4, diag <= 1e-8 and outer <= 1e-10 and bound_ok and jump_ok and dt <= 30,
            f"diagonal {diag:.1e}, outer {outer:.1e}, bound ok={bound_ok}, {jtxt} (10%), {dt:.1f}s")


def test_c5_normalization(verdict, box1):
    lines, ok = [], True
    for name, W in (("q=0", lambda z: pe.W0(pe.PTParams(1.0), z)), ("box", box1.W)):
        e = [abs(W(1j * t) * sf.gamma(1 + t) ** 2 / (2j * 1j * t) - 1) for t in (20, 40, 80)]
        ok &= e[0] > e[1] > e[2] and e[2] < 0.05
        lines.append(f"{name} " + "/".join(f"{v:.2e}" for v in e))
    verdict(5, ok, ", ".join(lines) + " (monotone, <0.05 at t=80)")


def test_c6_log_branches(verdict, box1):
    t0 = time.perf_counter()
    found = find_zeros(box1.W, SearchRegion((-21, 21, -5, -1)))
    pred = predict_log_branch(BOX, (6, 12))
    rep = match_branches(found, pred)
    errs = rep.errors_by_abs_j()
    spacing = rep.real_spacing()
    L = BOX.beta - BOX.alpha
    sp_ok = bool(spacing) and all(abs(s - math.pi / L) <= 0.05 * math.pi / L for s in spacing)
    printed = match_branches(found, predict_log_branch(BOX, (6, 12), convention="printed"))
    dt = time.perf_counter() - t0
    verdict(6, rep.decreasing() and sp_ok and dt <= 600,
            f"errors |j|=6..12 " + " ".join(f"{e:.3f}" for e in errs.values())
            + f", spacing within 5%={sp_ok}; printed convention decreasing={printed.decreasing()}; {dt:.0f}s")


def test_c7_zero_free_sector(verdict, box1):
    t0 = time.perf_counter()
    scan = scan_sector(box1.W, (-2, 2, -15, -8), delta=1.0, eta=0.3)
    dt = time.perf_counter() - t0
    verdict(7, scan.total == 0 and dt <= 120, f"count {scan.total} over {len(scan.cells)} cells, {dt:.1f}s (<=120s)")


def test_c8_hadamard(verdict, box1):
    P = pe.PTParams(1.0)
    zs = sorted((r.location for r in pe.resonances_closed_form(P, 400) for _ in range(r.multiplicity)), key=abs)
    errW = {N: max(hd.relative_errors(hd.fit_W(zs[:N]), lambda z: pe.W0(P, z), PROBES)) for N in (200, 400)}
    Sz = find_zeros(lambda z: box1.S(z, 1), SearchRegion((-13.1, 13.3, -13.2, 13.05)))
    model = hd.fit_S(Sz, +1, W=box1.W)
    errS = max(hd.relative_errors(model, lambda z: box1.S(z, 1), PROBES))
    ok = errW[400] <= 0.01 and errW[400] <= 0.5 * errW[200] and errS <= 0.02
    verdict(8, ok, f"W N=200 {errW[200]:.2e}, N=400 {errW[400]:.2e} (<=1%, halving); "
                   f"S+ box with {len(Sz)} zeros {errS:.2e} (<=2%)")


def test_c9_sequence_limit(verdict):
    q = PerturbationSpec.box(-2.0, -1.0)
    pr = Problem(q, 1.0)
    P = pe.PTParams(1.0)
    gaps = []
    for n in range(2, 9):
        z = 1j * (4 * n + 1) / 2
        t = pe.abc(P, z)
        gaps.append(abs(pr.S(z, 1) * sf.gamma(t.c - t.a) * sf.gamma(t.c - t.b) / 2 - 1))
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 0.1
    verdict(9, ok, "gaps " + " ".join(f"{g:.2e}" for g in gaps) + " (monotone, final <0.1)")
