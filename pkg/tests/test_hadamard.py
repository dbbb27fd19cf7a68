import math

import numpy as np
import pytest

from ptscat import hadamard as hd
from ptscat import pt_exact as pe
from ptscat.errors import DomainError, IllConditionedError, RegimeError
from ptscat.records import ZeroRecord

P1 = pe.PTParams(1.0)
PROBES = [1 + 1j, -1 + 1j, 0.5, 2 - 0.5j, -1.5 - 1j, 0.3 + 2j, -0.7 - 0.2j, 1.2 + 0.4j,
          -2 + 1.5j, 0.1 - 1.3j]


def lattice(P, N):
    zs, n = [], 0
    while len(zs) < N:
        zs += [-1j * (n + 0.5 + s * P.mu) for s in (1, -1)]
        n += 1
    return sorted(zs, key=abs)[:N]


def W1(z):
    return pe.W0(P1, z)


@pytest.fixture(scope="module")
def fits():
    return {N: hd.fit_W(lattice(P1, N)) for N in (200, 400)}


def test_fit_W_accuracy(fits):
    errs = {N: max(hd.relative_errors(m, W1, PROBES)) for N, m in fits.items()}
    assert errs[400] < 0.01
    assert errs[400] < 0.5 * errs[200]


def test_fit_W_conjugation_symmetric(fits):
    m = fits[400]
    for z in PROBES:
        assert abs(m(-np.conj(z)) - np.conj(m(z))) < 1e-12 * abs(m(z))


def test_fit_W_records_and_tuples_agree():
    zs = lattice(P1, 60)
    a = hd.fit_W(zs)
    b = hd.fit_W([ZeroRecord(z, 1, "resonance", 0.0) for z in zs])
    assert a.coeffs == b.coeffs


def test_fit_W_double_lattice():
    # lambda = 1/4: every zero double; records with multiplicity 2
    P = pe.PTParams(0.25)
    recs = [ZeroRecord(complex(-1j * (n + 0.5)), 2, "resonance", 0.0) for n in range(200)]
    m = hd.fit_W(recs)
    errs = hd.relative_errors(m, lambda z: pe.W0(P, z), PROBES)
    assert max(errs) < 0.02


def test_fit_W_rejects_asymmetric():
    zs = lattice(P1, 40)
    zs[3] += 0.01
    with pytest.raises(DomainError):
        hd.fit_W(zs)


def test_fit_W_ill_conditioned():
    with pytest.raises(IllConditionedError):
        hd.fit_W(lattice(P1, 10))
    with pytest.raises(IllConditionedError):
        hd.fit_W(lattice(P1, 60), probe_ts=(5, 10, 20, 40))


def test_fit_W_double_zero_at_origin_rejected():
    with pytest.raises(DomainError):
        hd.fit_W([0j, 0j] + lattice(P1, 40))


def test_product_identity_closed_form():
    for z in (0.4 - 0.2j, 1.5 + 0.3j):
        assert abs(hd.product_identity_rhs(W1, z) - pe.S0(P1) ** 2) < 1e-10 * abs(pe.S0(P1)) ** 2


def test_detect_l():
    assert hd.detect_l(W1) == 0
    # W(z) = z gives S(z)S(-z) = -5 z^2 + O(z^4) near 0, so l = 1
    assert hd.detect_l(lambda z: z) == 1
    assert hd.detect_l(lambda z: pe.W0(pe.PTParams(0.6), z)) == 0


def test_fit_S_zero_q():
    m = hd.fit_S([], +1, W=W1)
    assert m.regime == "ii"
    for z in (0.7 - 0.3j, 1.1 + 0.5j):
        assert abs(m(z) - pe.S0(P1)) < 1e-10 * abs(pe.S0(P1))
    assert m.consistency_residual < 1e-10


def test_fit_S_axis_regime():
    m = hd.fit_S([], +1, support_hint="R_minus", lam=1.0)
    assert m.regime == "i"
    assert abs(m(0.4 - 0.4j) - pe.S0(P1)) < 1e-8 * abs(pe.S0(P1))
    with pytest.raises(RegimeError):
        hd.fit_S([], +1, support_hint="R_minus")


def test_fit_S_regime_errors():
    with pytest.raises(RegimeError):
        hd.fit_S([], +1)
    # eigenvalue off iN forces the sign datum
    with pytest.raises(RegimeError):
        hd.fit_S([], +1, W=W1, eigenvalues=[1.3j])
    m = hd.fit_S([], +1, W=W1, eigenvalues=[1.3j], p_sign=int(np.sign(pe.S0(P1).real)))
    assert m.regime == "iii"
    assert abs(m(0.3) - pe.S0(P1)) < 1e-8 * abs(pe.S0(P1))


def test_fit_S_halfbound_needs_sign():
    Wh = lambda z: z * W1(z)
    with pytest.raises(RegimeError):
        hd.fit_S([], +1, W=Wh)


def test_fit_S_bad_args():
    with pytest.raises(ValueError):
        hd.fit_S([], 0, W=W1)
    with pytest.raises(ValueError):
        hd.fit_S([], 1, W=W1, support_hint="left")


def test_model_json(fits):
    js = fits[200].to_json()
    assert js["target"] == "W" and js["truncation_N"] == 200
    assert math.isfinite(js["fit_residual"])
