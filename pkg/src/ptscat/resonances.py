"""Zeros of an entire function in a rectangle: winding counts, quadrisection, Newton.

The counting primitive is phase continuation along polygon edges: the change
of arg W between neighbouring samples is kept below pi/4 by bisection, so the
winding number comes out as an exact integer.  Edge phases are cached under a
canonical orientation, which lets sibling cells share their common edges.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BudgetError, ContourError, DomainError
from .records import ZeroRecord, kind_of

Rect = tuple[float, float, float, float]
EvalFn = Callable[[complex], complex]

MAX_DARG = math.pi / 4
MAX_BEND = 0.1
HIT_REL = 1e-9
NUDGE = 0.37
MAX_NUDGES = 3


@dataclass(frozen=True)
class SearchRegion:
    rect: Rect
    delta: float = 1.0
    eta: float = 0.3
    contour_points: int = 32
    newton_tol: float = 1e-10
    max_evals: int = 1_000_000
    cluster_floor: float = 1e-7

    def __post_init__(self):
        x0, x1, y0, y1 = self.rect
        if not (x0 < x1 and y0 < y1):
            raise DomainError("rect must satisfy re_min < re_max and im_min < im_max")
        if not all(map(math.isfinite, self.rect)):
            raise DomainError("rect must be finite")
        if self.delta <= 0 or self.eta <= 0:
            raise DomainError("delta and eta must be positive")
        if self.contour_points < 4:
            raise DomainError("contour_points must be at least 4")


class Evaluator:
    """Call counter with a hard budget and a point cache."""

    def __init__(self, fn: EvalFn, max_evals: int = 1_000_000):
        self.fn = fn
        self.max_evals = max_evals
        self.calls = 0
        self._cache: dict[complex, complex] = {}
        self._edges: dict[tuple[complex, complex, int], float] = {}

    def __call__(self, z: complex) -> complex:
        z = complex(z)
        v = self._cache.get(z)
        if v is not None:
            return v
        self.calls += 1
        if self.calls > self.max_evals:
            raise BudgetError(f"more than {self.max_evals} function evaluations")
        v = complex(self.fn(z))
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ContourError(f"non-finite value at z={z}")
        self._cache[z] = v
        return v


def _as_evaluator(f, max_evals: int) -> Evaluator:
    return f if isinstance(f, Evaluator) else Evaluator(f, max_evals)


# ---------------------------------------------------------------- winding

def _refine(ev: Evaluator, za: complex, wa: complex, zb: complex, wb: complex, depth: int) -> float:
    """Phase change a -> b, bisecting until each half turns by at most pi/4.

    The midpoint also has to sit near the chord (wa + wb)/2: a pair of samples
    straddling a double zero sees a 2 pi turn that wraps to nearly nothing, but
    never a small second difference.
    """
    zm = 0.5 * (za + zb)
    wm = ev(zm)
    scale = max(abs(wa), abs(wb))
    if abs(wm) < HIT_REL * scale:
        raise ContourError(f"contour passes through a zero near z={zm}")
    d1 = _arg(wm / wa)
    d2 = _arg(wb / wm)
    bend = abs(wm - 0.5 * (wa + wb)) / max(scale, abs(wm))
    if abs(d1) <= MAX_DARG and abs(d2) <= MAX_DARG and bend <= MAX_BEND:
        return d1 + d2
    if depth > 60 or abs(zb - za) < 1e-15 * (1 + abs(za)):
        raise ContourError(f"phase does not resolve near z={za}")
    return _refine(ev, za, wa, zm, wm, depth + 1) + _refine(ev, zm, wm, zb, wb, depth + 1)


def _arg(w: complex) -> float:
    return math.atan2(w.imag, w.real)


def edge_phase(ev: Evaluator, a: complex, b: complex, n0: int) -> float:
    """Continuous change of arg f along the segment a -> b."""
    a, b = complex(a), complex(b)
    flip = (b.real, b.imag) < (a.real, a.imag)
    lo, hi = (b, a) if flip else (a, b)
    key = (lo, hi, n0)
    d = ev._edges.get(key)
    if d is None:
        zs = lo + (hi - lo) * np.linspace(0.0, 1.0, n0 + 1)
        ws = [ev(z) for z in zs]
        for k, w in enumerate(ws):
            if w == 0:
                raise ContourError(f"exact zero on contour at z={zs[k]}")
            nb = max(abs(ws[k - 1]) if k else 0.0, abs(ws[k + 1]) if k < n0 else 0.0)
            if abs(w) < HIT_REL * nb:
                raise ContourError(f"contour passes through a zero near z={zs[k]}")
        d = sum(_refine(ev, zs[k], ws[k], zs[k + 1], ws[k + 1], 0) for k in range(n0))
        ev._edges[key] = d
    return -d if flip else d


def _edge_samples(length: float, contour_points: int) -> int:
    return max(4, contour_points // 4) + int(math.ceil(4.0 * length))


def polygon_winding(f, poly: Sequence[complex], contour_points: int = 32,
                    max_evals: int = 1_000_000) -> int:
    """Winding number of f around a closed counter-clockwise polygon."""
    ev = _as_evaluator(f, max_evals)
    total = 0.0
    n = len(poly)
    for k in range(n):
        a, b = complex(poly[k]), complex(poly[(k + 1) % n])
        if a == b:
            continue
        total += edge_phase(ev, a, b, _edge_samples(abs(b - a), contour_points))
    w = total / (2 * math.pi)
    r = round(w)
    if abs(w - r) > 0.1:
        raise ContourError(f"winding {w:.3f} is not close to an integer")
    return int(r)


def rect_polygon(rect: Rect) -> list[complex]:
    x0, x1, y0, y1 = rect
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


def _shift(rect: Rect, s: complex) -> Rect:
    return (rect[0] + s.real, rect[1] + s.real, rect[2] + s.imag, rect[3] + s.imag)


def _diag(rect: Rect) -> float:
    return math.hypot(rect[1] - rect[0], rect[3] - rect[2])


def count_zeros(f, rect: Rect, contour_points: int = 32, max_evals: int = 1_000_000,
                nudge_scale: float = 1e-4) -> int:
    """Number of zeros (with multiplicity) inside ``rect``.

    A contour that runs through a zero is shifted by 0.37 * diag * (1+i)/sqrt2
    times ``nudge_scale`` per attempt; after three attempts the error propagates.
    """
    count, _ = _count_nudged(_as_evaluator(f, max_evals), rect, contour_points, nudge_scale)
    return count


def _count_nudged(ev: Evaluator, rect: Rect, contour_points: int, nudge_scale: float):
    step = NUDGE * _diag(rect) * nudge_scale * (1 + 1j) / math.sqrt(2)
    last = None
    for attempt in range(MAX_NUDGES + 1):
        r = _shift(rect, attempt * step)
        try:
            return polygon_winding(ev, rect_polygon(r), contour_points), r
        except ContourError as exc:
            last = exc
    raise ContourError(f"contour hits a zero after {MAX_NUDGES} nudges: {last}")


# ---------------------------------------------------------------- isolation

def newton(ev, z0: complex, mult: int = 1, tol: float = 1e-10, maxit: int = 60,
           radius: float | None = None) -> complex | None:
    """Newton (multiplicity-scaled) with a central-difference derivative."""
    z = complex(z0)
    best, best_step = None, math.inf
    for _ in range(maxit):
        w = ev(z)
        if w == 0:
            return z
        h = 1e-6 * (1 + abs(z))
        d = (ev(z + h) - ev(z - h)) / (2 * h)
        if d == 0:
            break
        step = mult * w / d
        z = z - step
        if abs(step) < best_step:
            best, best_step = z, abs(step)
        if abs(step) < tol * (1 + abs(z)):
            return z
        if radius is not None and abs(z - z0) > radius:
            return None
    if best is not None and best_step < 1e-6 * (1 + abs(best)):
        return best
    return None


def zero_residual(ev, z: complex, mult: int = 1) -> float:
    """Newton-step size m |W| / |W'| at z: a scale-free distance to the zero.

    |W| itself is useless as a residual because |W| grows exponentially with |z|.
    """
    w = ev(z)
    if w == 0:
        return 0.0
    h = 1e-6 * (1 + abs(z))
    d = (ev(z + h) - ev(z - h)) / (2 * h)
    return math.inf if d == 0 else float(mult * abs(w) / abs(d))


def circle_moments(ev, center: complex, r: float, n: int = 64) -> tuple[float, complex]:
    """(zero count, sum of zeros) inside |z - center| < r from samples on the circle."""
    th = 2 * np.pi * np.arange(n) / n
    zs = center + r * np.exp(1j * th)
    ws = np.array([ev(z) for z in zs])
    spec = np.fft.fft(ws)
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    dws = np.fft.ifft(1j * k * spec)
    ratio = dws / ws
    count = (np.mean(ratio) / 1j).real
    s1 = np.mean(zs * ratio) / 1j
    return float(count), complex(s1)


def _inside(z: complex, rect: Rect, pad: float = 0.0) -> bool:
    return rect[0] - pad <= z.real <= rect[1] + pad and rect[2] - pad <= z.imag <= rect[3] + pad


def _isolate(ev: Evaluator, rect: Rect, cnt: int, region: SearchRegion) -> ZeroRecord | None:
    w, h = rect[1] - rect[0], rect[3] - rect[2]
    c = complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))
    z = newton(ev, c, cnt, region.newton_tol, radius=2 * _diag(rect))
    if z is None or not _inside(z, rect, 1e-12 * (1 + abs(z))):
        return None
    rt = min(0.25 * min(w, h), 1e-3 * (1 + abs(z)))
    rt = max(rt, 1e-9 * (1 + abs(z)))
    try:
        tight = polygon_winding(ev, rect_polygon((z.real - rt, z.real + rt, z.imag - rt, z.imag + rt)),
                                region.contour_points)
    except ContourError:
        return None
    if tight != cnt:
        return None
    if cnt > 1:
        m, s1 = circle_moments(ev, z, 0.5 * rt)
        if abs(m - cnt) < 0.1:
            z = s1 / cnt
    if abs(z) < region.newton_tol:
        z = 0j
    return ZeroRecord(z, cnt, kind_of(z, region.newton_tol), zero_residual(ev, z, cnt))


def _split(rect: Rect, offset: complex) -> list[Rect]:
    xm = 0.5 * (rect[0] + rect[1]) + offset.real
    ym = 0.5 * (rect[2] + rect[3]) + offset.imag
    return [(rect[0], xm, rect[2], ym), (xm, rect[1], rect[2], ym),
            (rect[0], xm, ym, rect[3]), (xm, rect[1], ym, rect[3])]


def _children(ev: Evaluator, rect: Rect, cnt: int, region: SearchRegion):
    w, h = rect[1] - rect[0], rect[3] - rect[2]
    base = NUDGE * _diag(rect) * (1 + 1j) / math.sqrt(2)
    last = None
    for attempt in range(MAX_NUDGES + 1):
        # nudges move the split point only, so the children still tile the parent
        off = base * attempt / (MAX_NUDGES + 1) * 0.5
        off = complex(off.real * w / _diag(rect), off.imag * h / _diag(rect))
        kids = _split(rect, off)
        try:
            counts = [polygon_winding(ev, rect_polygon(k), region.contour_points) for k in kids]
        except ContourError as exc:
            last = exc
            continue
        if sum(counts) == cnt:
            return list(zip(kids, counts))
        last = ContourError(f"child counts {counts} do not add up to {cnt}")
    raise ContourError(f"quadrisection failed after {MAX_NUDGES} nudges: {last}")


def find_zeros(f, region: SearchRegion) -> list[ZeroRecord]:
    """All zeros of f in region.rect, polished and verified by tight-box counts."""
    ev = _as_evaluator(f, region.max_evals)
    total, rect = _count_nudged(ev, region.rect, region.contour_points, 1e-4)
    out: list[ZeroRecord] = []
    stack = [(rect, total)]
    while stack:
        r, cnt = stack.pop()
        if cnt == 0:
            continue
        if cnt < 0:
            raise ContourError(f"negative count in cell {r}")
        rec = _isolate(ev, r, cnt, region)
        if rec is not None:
            out.append(rec)
            continue
        if _diag(r) < region.cluster_floor:
            c = complex(0.5 * (r[0] + r[1]), 0.5 * (r[2] + r[3]))
            out.append(ZeroRecord(c, cnt, kind_of(c, region.newton_tol), zero_residual(ev, c, cnt)))
            continue
        stack.extend(_children(ev, r, cnt, region))
    return classify(out, region.newton_tol)


def classify(records: Iterable[ZeroRecord], tol: float = 1e-10) -> list[ZeroRecord]:
    """Retag kinds from the imaginary part (and |z| < tol for the half-bound state)."""
    out = []
    for r in records:
        if r.multiplicity > 2:
            warnings.warn(f"zero at {r.location} has multiplicity {r.multiplicity}", RuntimeWarning)
        out.append(ZeroRecord(r.location, r.multiplicity, kind_of(r.location, tol), r.residual))
    out.sort(key=lambda r: (-r.location.imag, r.location.real))
    return out


def mirror_defect(records: Sequence[ZeroRecord]) -> float:
    """Largest distance from a zero's mirror -conj(z) to the nearest listed zero."""
    if not records:
        return 0.0
    pts = np.array([r.location for r in records])
    return float(max(np.min(np.abs(pts + np.conj(p))) for p in pts))


# ---------------------------------------------------------------- sector scans

HalfPlane = tuple[float, float, float]  # nx * x + ny * y <= c


def clip_polygon(poly: Sequence[complex], hp: HalfPlane) -> list[complex]:
    """Sutherland-Hodgman clip of a polygon against one half-plane."""
    nx, ny, c = hp

    def val(p):
        return nx * p.real + ny * p.imag - c

    out: list[complex] = []
    n = len(poly)
    for k in range(n):
        p, q = poly[k], poly[(k + 1) % n]
        vp, vq = val(p), val(q)
        if vp <= 0:
            out.append(p)
        if (vp < 0 < vq) or (vq < 0 < vp):
            out.append(p + (q - p) * (vp / (vp - vq)))
    return out


def _convex_halfplanes(poly: Sequence[complex]) -> list[HalfPlane]:
    hps = []
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        e = b - a
        # counter-clockwise: interior lies to the left of each edge
        nx, ny = e.imag, -e.real
        hps.append((nx, ny, nx * a.real + ny * a.imag))
    return hps


def sector_halfplanes(delta: float) -> list[HalfPlane]:
    """S1 = {Im z < 0, |Re z| <= -delta Im z}."""
    return [(1.0, delta, 0.0), (-1.0, delta, 0.0), (0.0, 1.0, 0.0)]


def disk_polygon(center: complex, r: float, n: int = 48) -> list[complex]:
    th = 2 * np.pi * np.arange(n) / n
    return [complex(center + r * np.exp(1j * t)) for t in th]


def ball_centers(rect: Rect, eta: float) -> list[complex]:
    """Centers -i(n+1) of the excluded balls meeting ``rect``."""
    lo = max(1, int(math.floor(-rect[3] - eta)))
    hi = int(math.ceil(-rect[2] + eta))
    return [complex(0, -k) for k in range(lo, hi + 1)
            if rect[0] - eta <= 0 <= rect[1] + eta and rect[2] - eta <= -k <= rect[3] + eta]


GROW_STEP = 1e-3
GROW_TRIES = 4


def _sector_cell(ev, r: Rect, delta: float, balls, contour_points: int) -> int | None:
    poly = rect_polygon(r)
    for hp in sector_halfplanes(delta):
        poly = clip_polygon(poly, hp)
    if len(poly) < 3:
        return None
    n = polygon_winding(ev, poly, contour_points)
    for b in balls:
        piece = b
        for hp in _convex_halfplanes(poly):
            piece = clip_polygon(piece, hp)
        if len(piece) >= 3:
            n -= polygon_winding(ev, piece, contour_points)
    return n


@dataclass
class SectorScan:
    delta: float
    eta: float
    cells: list = field(default_factory=list)  # (rect, count)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.cells)


def scan_sector(f, rect: Rect, delta: float = 1.0, eta: float = 0.3, cell: float = 1.0,
                contour_points: int = 32, max_evals: int = 1_000_000) -> SectorScan:
    """Zero counts of f on cells of rect intersected with S1, minus the balls of B."""
    ev = _as_evaluator(f, max_evals)
    nx = max(1, int(math.ceil((rect[1] - rect[0]) / cell - 1e-12)))
    ny = max(1, int(math.ceil((rect[3] - rect[2]) / cell - 1e-12)))
    xs = np.linspace(rect[0], rect[1], nx + 1)
    ys = np.linspace(rect[2], rect[3], ny + 1)
    balls = [disk_polygon(c, eta) for c in ball_centers(rect, eta)]
    out = SectorScan(delta, eta)
    for i in range(nx):
        for j in range(ny):
            r = (float(xs[i]), float(xs[i + 1]), float(ys[j]), float(ys[j + 1]))
            for k in range(GROW_TRIES):
                # a zero sitting on a cell edge (ball centres lie on the grid) is
                # handled by growing the cell; the ball piece shares the contour
                g = k * GROW_STEP * cell
                try:
                    n = _sector_cell(ev, (r[0] - g, r[1] + g, r[2] - g, r[3] + g), delta, balls, contour_points)
                    break
                except ContourError:
                    if k == GROW_TRIES - 1:
                        raise
            if n is not None:
                out.cells.append((r, n))
    return out


__all__ = [
    "SearchRegion", "Evaluator", "count_zeros", "find_zeros", "classify", "polygon_winding",
    "edge_phase", "newton", "zero_residual", "circle_moments", "mirror_defect", "scan_sector", "SectorScan",
    "clip_polygon", "sector_halfplanes", "disk_polygon", "ball_centers", "rect_polygon",
]
