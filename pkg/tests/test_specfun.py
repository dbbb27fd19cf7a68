import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptscat import _backend, _fallback
from ptscat import specfun as sf
from ptscat.errors import AccuracyLossError, DegenerateError, DomainError, PoleError, RegimeError
from ptscat.specfun import Hyp2F1Args

cplx = st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False)


def off_poles(z, gap=1e-3):
    return not (z.real <= 0.5 and abs(z - round(z.real)) < gap)


def test_gamma_trivial():
    assert sf.gamma(1) == pytest.approx(1, abs=1e-15)
    assert sf.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gamma_frozen_mpmath():
    # mpmath.gamma(0.3+0.4j)
    assert abs(sf.gamma(0.3 + 0.4j) - (0.9115615278045859 - 1.3671933575854187j)) < 1e-13


def test_gamma_vs_mpmath_grid():
    for z in [3.7 - 2.1j, -4.3 + 0.2j, 12.5 + 9j, -0.5 - 7j, 25 + 1j]:
        ref = complex(mp.gamma(z))
        assert abs(sf.gamma(z) / ref - 1) < 5e-13


def test_gamma_poles_and_rgamma_zeros():
    with pytest.raises(PoleError):
        sf.gamma(-3)
    with pytest.raises(PoleError):
        sf.loggamma(0)
    for k in range(6):
        assert sf.rgamma(-k) == 0
    assert abs(sf.rgamma(-2.5) * sf.gamma(-2.5) - 1) < 1e-14


def test_rgamma_overflow_is_quiet():
    with np.errstate(all="raise"):
        v = sf.rgamma(-800.5)
    assert not np.isfinite(v)


def test_reflection_gamma():
    assert sf.reflection_gamma(0.5) == pytest.approx(math.pi, rel=1e-15)
    assert sf.reflection_gamma(0.25) == pytest.approx(math.pi * math.sqrt(2), rel=1e-14)
    # pi / sin(pi (1+i)) from mpmath
    assert abs(sf.reflection_gamma(1 + 1j) - 0.27202905498213314j) < 1e-15
    with pytest.raises(PoleError):
        sf.reflection_gamma(2.0)


@settings(max_examples=300, deadline=None)
@given(cplx)
def test_gamma_recurrence(z):
    if not off_poles(z) or not off_poles(z + 1) or abs(z) < 1e-3:
        return
    g1 = sf.gamma(z + 1)
    assert abs(g1 - z * sf.gamma(z)) <= 1e-10 * abs(g1)


@settings(max_examples=200, deadline=None)
@given(cplx)
def test_reflection_identity(z):
    if abs(z - round(z.real)) < 1e-3 or abs(z.imag) > 15:
        return
    val = sf.gamma(z) * sf.gamma(1 - z) * sf.sinpi(z) / math.pi
    assert abs(val - 1) < 1e-9


def test_hyp2f1_examples():
    assert sf.hyp2f1(Hyp2F1Args(0.3 + 1j, -2j, 1.7, 0.0)) == 1
    a, zeta = 0.4 - 0.6j, 0.35
    assert abs(sf.hyp2f1(Hyp2F1Args(a, 1.2 + 0.5j, 1.2 + 0.5j, zeta)) - (1 - zeta) ** (-a)) < 1e-14
    # F(1,1,3/2;1/2) = pi/2 (mpmath)
    assert abs(sf.hyp2f1(Hyp2F1Args(1, 1, 1.5, 0.5)) - 1.5707963267948966) < 1e-14


def test_hyp2f1_vs_mpmath(rng):
    for _ in range(30):
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        c = complex(rng.uniform(0.5, 3), rng.normal())
        zeta = rng.uniform(-0.9, 0.9)
        ref = complex(mp.hyp2f1(a, b, c, zeta))
        assert abs(sf.hyp2f1(Hyp2F1Args(a, b, c, zeta)) - ref) <= 1e-12 * max(1, abs(ref))


def test_series_domain_and_cap():
    with pytest.raises(DomainError):
        sf.series(1, 1, 2, 0.995)
    with pytest.raises(PoleError):
        sf.series(1, 1, -2, 0.3)


def test_regularized():
    assert sf.hyp2f1_regularized(Hyp2F1Args(0.7, -1.1j, 1.0, 0.0)) == pytest.approx(1)
    args = Hyp2F1Args(0.3 + 0.2j, 1.1, 2 - 0.3j, 0.4)
    assert abs(sf.hyp2f1_regularized(args) * sf.gamma(args.c) - sf.hyp2f1(args)) < 1e-14
    # F(1,1,0;0.3) regularized = 0.3 F(2,2,2;0.3) = 0.3/0.49 (mpmath)
    assert abs(sf.hyp2f1_regularized(Hyp2F1Args(1, 1, 0, 0.3)) - 0.6122448979591837) < 1e-14


def test_regularized_consistency_random(rng):
    for _ in range(50):
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        c = complex(rng.uniform(0.5, 4), rng.normal(scale=2))
        args = Hyp2F1Args(a, b, c, rng.uniform(0, 0.9))
        plain = sf.hyp2f1(args)
        assert abs(sf.hyp2f1_regularized(args) * sf.gamma(c) - plain) <= 1e-10 * max(1, abs(plain))


def test_derivative():
    assert sf.hyp2f1_derivative(Hyp2F1Args(0, 1 + 1j, 2, 0.4)) == 0
    a, zeta = 0.3 + 0.2j, 0.45
    assert abs(sf.hyp2f1_derivative(Hyp2F1Args(a, 2.5, 2.5, zeta)) - a * (1 - zeta) ** (-a - 1)) < 1e-13
    # mpmath.diff of hyp2f1(2-i, 1, 1.5, t) at t=0.3
    ref = 2.5510840124903567 - 2.4176510617626485j
    assert abs(sf.hyp2f1_derivative(Hyp2F1Args(2 - 1j, 1, 1.5, 0.3)) - ref) < 1e-12


def test_derivative_vs_differences(rng):
    h = 1e-5
    for _ in range(30):
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        c = complex(rng.uniform(0.5, 3), rng.normal())
        zeta = rng.uniform(0.05, 0.8)
        fd = (sf.hyp2f1(Hyp2F1Args(a, b, c, zeta + h)) - sf.hyp2f1(Hyp2F1Args(a, b, c, zeta - h))) / (2 * h)
        assert abs(sf.hyp2f1_derivative(Hyp2F1Args(a, b, c, zeta)) - fd) < 1e-6


def test_series_derivative_output():
    val, d = sf.series(0.5 + 1j, 0.5 - 1j, 1.3, np.array([0.1, 0.5]), regularized=True)
    for zeta, dv in zip([0.1, 0.5], d):
        ref = complex(mp.diff(lambda t: mp.hyp2f1(0.5 + 1j, 0.5 - 1j, 1.3, t), zeta)) / complex(mp.gamma(1.3))
        assert abs(dv - ref) < 1e-12


def test_gauss_half():
    assert sf.gauss_half(0, 0) == pytest.approx(1)
    assert sf.gauss_half(1, 1) == pytest.approx(math.pi / 2, rel=1e-14)
    # series summation at 1/2 via mpmath
    assert abs(sf.gauss_half(0.5 - 1j, 0.5 + 1j) - 2.0556045831811525) < 1e-13
    a, b = 0.3 - 0.4j, 1.1 + 0.2j
    assert abs(sf.gauss_half(a, b) - sf.hyp2f1(Hyp2F1Args(a, b, (a + b + 1) / 2, 0.5))) < 1e-13


def _kummer_residual(args):
    c1, c2 = sf.kummer_connect(args)
    f3, f4 = sf.kummer_basis(args)
    lhs = sf.hyp2f1(args)
    return abs(lhs - (c1 * f3 + c2 * f4)) / max(1, abs(lhs))


def test_kummer_examples():
    assert _kummer_residual(Hyp2F1Args(0.3, 0.2j, 1 - 0.7j, 0.5)) < 1e-8
    c1, c2 = sf.kummer_connect(Hyp2F1Args(0, 0.4 + 0.1j, 1.3 - 0.2j, 0.5))
    assert abs(c1 - 1) < 1e-13 and c2 == 0
    with pytest.raises(DegenerateError):
        sf.kummer_connect(Hyp2F1Args(0.5, 0.5, 2.0, 0.5))


def test_kummer_random(rng):
    n = 0
    while n < 100:
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        c = complex(rng.uniform(0.5, 3), rng.normal())
        d = c - a - b
        if abs(d - round(d.real)) < 0.05:
            continue
        assert _kummer_residual(Hyp2F1Args(a, b, c, rng.uniform(0.2, 0.8))) < 1e-8
        n += 1


def test_freg_connection_branch_matches_series():
    a, b, c = 0.5 - 0.8j, 0.5 + 0.8j, 1 - 2.3j
    zeta = np.array([0.91, 0.95, 0.98])
    v1, d1 = sf.freg(a, b, c, zeta)
    v2, d2 = sf.series(a, b, c, zeta, regularized=True)
    assert np.max(np.abs(v1 - v2)) < 1e-11 * np.max(np.abs(v2))
    assert np.max(np.abs(d1 - d2)) < 1e-9 * np.max(np.abs(d2))


def test_freg_close_to_one_vs_mpmath():
    a, b, c = 0.5 - 0.8j, 0.5 + 0.8j, 1 - 2.3j
    for zeta in (0.999, 0.999999):
        ref = complex(mp.hyp2f1(a, b, c, zeta) / mp.gamma(c))
        assert abs(sf.freg(a, b, c, zeta)[0] / ref - 1) < 1e-11


def test_large_c():
    args = Hyp2F1Args(1, 1, 40j, 0.3)
    assert sf.hyp2f1_large_c(args, 1) == 1
    assert abs(sf.hyp2f1_large_c(args, 3) - sf.hyp2f1(args)) < abs(40j) ** -3
    term = Hyp2F1Args(-3, 0.4, 25 + 10j, 0.6)
    assert sf.wagner_regime(term) == 1
    assert abs(sf.hyp2f1_large_c(term, 4) - sf.hyp2f1(term)) < 1e-14


def test_large_c_regime_error():
    with pytest.raises(RegimeError):
        sf.hyp2f1_large_c(Hyp2F1Args(0.3, 0.2, -2.0 + 1e-6j, 0.3), 3)


def test_backends_agree(rng):
    zeta = rng.uniform(0, 0.9, size=64).astype(complex)
    head = np.array([1.0 + 0j])
    ref = _fallback.hyp_series(0.3 + 1j, 0.7 - 2j, 1.4 - 0.5j, zeta, head, 1e-16, 8, 20000)
    got = _backend.hyp_series(0.3 + 1j, 0.7 - 2j, 1.4 - 0.5j, zeta, head, 1e-16, 8, 20000)
    assert np.max(np.abs(ref[0] - got[0])) < 1e-13 * np.max(np.abs(ref[0]))
    assert np.max(np.abs(ref[1] - got[1])) < 1e-12 * np.max(np.abs(ref[1]))


def test_backend_name():
    assert _backend.NAME in ("cython", "python")
