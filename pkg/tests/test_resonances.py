import math

import pytest

from ptscat import pt_exact as pe
from ptscat.errors import BudgetError, DomainError
from ptscat.records import ZeroRecord
from ptscat.resonances import (SearchRegion, ball_centers, clip_polygon, count_zeros, find_zeros,
                               mirror_defect, newton, polygon_winding, rect_polygon, scan_sector,
                               zero_residual)


def W0(lam):
    P = pe.PTParams(lam)
    return lambda z: pe.W0(P, z)


def test_count_simple():
    s = math.sqrt(3) / 2
    assert count_zeros(W0(1.0), (s - 0.2, s + 0.2, -0.7, -0.3)) == 1


def test_count_double():
    assert count_zeros(W0(0.25), (-0.2, 0.2, -0.7, -0.3)) == 2


def test_count_upper_half_plane_empty():
    assert count_zeros(W0(1.0), (-3, 3, 0.1, 4)) == 0


def test_count_polynomial():
    f = lambda z: (z - 0.3) * (z + 1j) ** 3 * (z - 5)
    assert count_zeros(f, (-1, 1, -2, 1)) == 4


def test_find_zeros_lambda_fifth():
    recs = find_zeros(W0(0.2), SearchRegion((-1, 1, -3, 0)))
    assert len(recs) == 6
    d = math.sqrt(0.05)
    want = sorted(n + 0.5 + s * d for n in range(3) for s in (1, -1))
    got = sorted(-r.location.imag for r in recs)
    assert max(abs(a - b) for a, b in zip(got, want)) < 1e-9
    assert all(abs(r.location.real) < 1e-9 and r.kind == "resonance" for r in recs)


def test_find_zeros_eigenvalue():
    recs = find_zeros(W0(-2.0), SearchRegion((-1, 1, 0.5, 2)))
    assert len(recs) == 1
    assert abs(recs[0].location - 1j) < 1e-10
    assert recs[0].kind == "eigenvalue"


def test_find_zeros_double():
    recs = find_zeros(W0(0.25), SearchRegion((-1, 1, -2.2, 0)))
    assert [r.multiplicity for r in recs] == [2, 2]
    assert abs(recs[0].location + 0.5j) < 1e-8 and abs(recs[1].location + 1.5j) < 1e-8


def test_closed_form_agrees_with_search():
    P = pe.PTParams(1.0)
    found = find_zeros(W0(1.0), SearchRegion((-2, 2, -5, 0)))
    exact = [r for r in pe.resonances_closed_form(P, 6) if r.location.imag > -5]
    assert len(found) == len(exact) == 10
    for r in exact:
        assert min(abs(r.location - f.location) for f in found) < 1e-9


def test_quadrisection_additivity():
    f = W0(1.0)
    x0, x1, y0, y1 = -1.9, 2.1, -4.7, 0.3
    xm, ym = 0.13, -2.17
    parts = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
    assert sum(count_zeros(f, p) for p in parts) == count_zeros(f, (x0, x1, y0, y1)) == 10


def test_polygon_winding_matches_rect():
    f = W0(1.0)
    r = (-1.5, 1.5, -2.2, 0.1)
    assert polygon_winding(f, rect_polygon(r)) == count_zeros(f, r) == 4


def test_mirror_defect():
    recs = find_zeros(W0(1.0), SearchRegion((-2, 2, -3, 0)))
    assert mirror_defect(recs) < 1e-9
    lopsided = recs + [ZeroRecord(1.0 - 4j, 1, "resonance", 0.0)]
    assert mirror_defect(lopsided) > 1.0


def test_newton_residual():
    f = W0(1.0)
    z0 = math.sqrt(3) / 2 - 0.5j + 0.01
    z = newton(f, z0)
    assert abs(z - (math.sqrt(3) / 2 - 0.5j)) < 1e-10
    assert zero_residual(f, z) < 1e-10


def test_budget():
    with pytest.raises(BudgetError):
        find_zeros(W0(1.0), SearchRegion((-2, 2, -5, 0), max_evals=20))


def test_region_validation():
    with pytest.raises(DomainError):
        SearchRegion((1, -1, 0, 1))
    with pytest.raises(DomainError):
        SearchRegion((-1, 1, 0, 1), eta=0)


def test_clip_polygon():
    sq = rect_polygon((0, 2, 0, 2))
    half = clip_polygon(sq, (1.0, 0.0, 1.0))  # x <= 1
    assert max(p.real for p in half) == pytest.approx(1.0)
    area = 0.5 * abs(sum((a.conjugate() * b).imag for a, b in zip(half, half[1:] + half[:1])))
    assert area == pytest.approx(2.0)
    assert clip_polygon(sq, (1.0, 0.0, -1.0)) == []


def test_ball_centers():
    assert ball_centers((-2, 2, -4.5, -1.5), 0.3) == [-2j, -3j, -4j]
    assert ball_centers((1, 2, -4, -1), 0.3) == []


def test_scan_counts_zeros_outside_balls():
    # negative control: W0 at lambda=1 has zeros at +-sqrt(3)/2 - i(n+1/2), inside S1, off the balls
    scan = scan_sector(W0(1.0), (-2, 2, -5, -1))
    assert scan.total == 8


def test_scan_excludes_ball_zeros():
    # lambda=1/5 zeros sit within 0.28 of -i(n+1), so the balls swallow them
    scan = scan_sector(W0(0.2), (-2, 2, -4.5, -1.5))
    assert scan.total == 0
