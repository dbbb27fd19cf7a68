"""Asymptotic resonance branches and a matcher against computed zeros.

Two conventions are offered for the logarithmic branches produced by the
endpoint discontinuities of q.

``corrected`` (default) solves the leading-order quantization condition

    q_alpha q_beta e^{2iz(beta - alpha)} = +-(2iz)^n,   n = p + r + 2,

where q_alpha = q^(r-1)(alpha+) and q_beta = q^(p-1)(beta-).  Each endpoint
reflects like a jump in q^(k-1) seen from a free wave, i.e. with amplitude
~ (2iz)^-(k+1); the constant is C = (-1)^p d_x^r K-(corner) d_x^p K+(corner),
built from the exact corner derivatives of the kernels.

``printed`` reproduces the published branch formula (exponent p + r, jumps of
magnitude 1/4, factor (p + r - 2)!).  It is kept for comparison; the matcher
decides which one the computed zeros follow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .kernel import PerturbationSpec, boundary_jump_exact
from .pt_exact import pt_sqrt
from .records import ZeroRecord

CONVENTIONS = ("corrected", "printed")


@dataclass(frozen=True)
class BranchPrediction:
    kind: str                 # "log_branch" or "vertical_branch"
    A: float
    C: float
    p: int | None
    r: int | None
    alpha: float
    beta: float
    j_range: tuple[int, int]
    js: tuple[int, ...]
    points: tuple[complex, ...]
    convention: str = "corrected"
    flags: tuple[str, ...] = ()

    def point(self, j: int) -> complex:
        return self.points[self.js.index(j)]

    def to_rows(self) -> list[dict]:
        return [{"kind": self.kind, "j": j, "re": z.real, "im": z.imag}
                for j, z in zip(self.js, self.points)]


def _orders(q: PerturbationSpec) -> tuple[int, int]:
    p, r = q.p, q.r
    if p is None or r is None:
        raise DomainError("both endpoint jumps must be nonzero")
    return p, r


def branch_constants(q: PerturbationSpec, convention: str = "corrected") -> tuple[float, float, int, int]:
    """(C, A, p, r) for the logarithmic branches of q."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    p, r = _orders(q)
    if convention == "corrected":
        dkp = boundary_jump_exact(q, "plus", p)
        dkm = boundary_jump_exact(q, "minus", r)
        C = (-1) ** p * dkm * dkp
        return C, C, p, r
    dkp = -0.25 * q.endpoint_derivative("beta", p - 1)
    dkm = -0.25 * q.endpoint_derivative("alpha", r - 1)
    C = (-1) ** p * dkm * dkp
    return C, C / math.factorial(p + r - 2), p, r


def branch_constant(q: PerturbationSpec, convention: str = "corrected") -> float:
    """The branch constant A (sign and size of the endpoint product)."""
    return branch_constants(q, convention)[1]


def _js(j_range: tuple[int, int]) -> list[int]:
    lo, hi = int(j_range[0]), int(j_range[1])
    if lo < 1 or hi < lo:
        raise DomainError("j_range must be (lo, hi) with 1 <= lo <= hi")
    return list(range(lo, hi + 1))


def predict_log_branch(q: PerturbationSpec, j_range: tuple[int, int] = (6, 12),
                       convention: str = "corrected", require_origin: bool = True) -> BranchPrediction:
    """Leading-order resonances on the two logarithmic branches.

    j > 0 sits at negative real part; beta_{-j} = -conj(beta_j).
    """
    alpha, beta = q.alpha, q.beta
    flags = []
    if not alpha < 0 < beta:
        if require_origin:
            raise DomainError("the branch asymptotics assume 0 inside (alpha, beta)")
        flags.append("origin_outside_support")
    C, A, p, r = branch_constants(q, convention)
    L = beta - alpha
    js, pts = [], []
    for j in _js(j_range):
        if convention == "printed":
            re = -math.pi / (2 * L) * (2 * j + (p + r - 2) / 2 + (math.copysign(1, A) + 1))
            im = (-(p + r) / (2 * L) * math.log(j * math.pi / L)
                  + math.log(abs(A) * math.factorial(p + r - 2)) / (2 * L))
        else:
            n = p + r + 2
            re = -math.pi / (2 * L) * (2 * j + (p + r - 2) / 2 + (1 - math.copysign(1, C)) / 2)
            im = -n / (2 * L) * math.log(abs(re)) + math.log(abs(C)) / (2 * L)
        z = complex(re, im)
        js += [j, -j]
        pts += [z, -z.conjugate()]
    return BranchPrediction("log_branch", A, C, p, r, alpha, beta, tuple(j_range), tuple(js),
                            tuple(pts), convention, tuple(flags))


def predict_vertical_branch(lam: float, j_range: tuple[int, int] = (1, 5), hypothesis: str = "printed",
                            extrapolated: bool = False) -> BranchPrediction:
    """Persistent resonances near the imaginary axis when supp q lies in (0, inf).

    ``printed``: alpha_{+-j} = -i(2|j| - 1 +- mu - 1/2) (spacing 2);
    ``unit``: the unperturbed lattice -i(|j| - 1/2 +- mu) (spacing 1).
    For lambda > 1/4 (imaginary mu) the form is an extrapolation and must be
    requested explicitly.
    """
    if lam > 0.25 and not extrapolated:
        raise DomainError("lambda > 1/4 needs extrapolated=True")
    if hypothesis not in ("printed", "unit"):
        raise ValueError("hypothesis must be 'printed' or 'unit'")
    mu = pt_sqrt(0.25 - lam)
    js, pts = [], []
    for j in _js(j_range):
        base = 2 * j - 1.5 if hypothesis == "printed" else j - 0.5
        for s in (1, -1):
            js.append(s * j)
            pts.append(complex(-1j * (base + s * mu)))
    flags = ("extrapolated",) if lam > 0.25 else ()
    return BranchPrediction("vertical_branch", 0.0, 0.0, None, None, 0.0, 0.0, tuple(j_range),
                            tuple(js), tuple(pts), hypothesis, flags)


@dataclass
class MatchReport:
    pairs: list = field(default_factory=list)      # (j, predicted, found, error)
    unmatched: list = field(default_factory=list)  # j without a partner

    def errors_by_abs_j(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for j, _, _, e in self.pairs:
            out[abs(j)] = max(out.get(abs(j), 0.0), e)
        return dict(sorted(out.items()))

    def decreasing(self) -> bool:
        errs = list(self.errors_by_abs_j().values())
        return len(errs) >= 2 and all(b < a for a, b in zip(errs, errs[1:]))

    def real_spacing(self) -> list[float]:
        """Gaps between found real parts at consecutive |j| on the j > 0 side."""
        side = sorted((abs(j), f) for j, _, f, _ in self.pairs if j > 0)
        return [abs(b[1].real - a[1].real) for a, b in zip(side, side[1:]) if b[0] == a[0] + 1]

    def to_json(self) -> dict:
        return {"pairs": [{"j": j, "pred_re": p.real, "pred_im": p.imag, "found_re": f.real,
                           "found_im": f.imag, "error": e} for j, p, f, e in self.pairs],
                "unmatched": list(self.unmatched),
                "errors_by_abs_j": {str(k): v for k, v in self.errors_by_abs_j().items()},
                "decreasing": self.decreasing()}


def match_branches(found: Iterable, pred: BranchPrediction, max_dist: float | None = None) -> MatchReport:
    """Greedy nearest-neighbour pairing of predictions with found zeros."""
    locs = [f.location if isinstance(f, ZeroRecord) else complex(f) for f in found]
    if not locs or not pred.points:
        raise DomainError("need non-empty found and predicted sets")
    P = np.array(pred.points)
    F = np.array(locs)
    dist = np.abs(P[:, None] - F[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used_p, used_f = set(), set()
    rep = MatchReport()
    for flat in order:
        i, k = divmod(int(flat), F.size)
        if i in used_p or k in used_f:
            continue
        d = float(dist[i, k])
        if max_dist is not None and d > max_dist:
            break
        used_p.add(i)
        used_f.add(k)
        rep.pairs.append((pred.js[i], complex(P[i]), complex(F[k]), d))
    rep.pairs.sort(key=lambda t: (abs(t[0]), -t[0]))
    rep.unmatched = [j for i, j in enumerate(pred.js) if i not in used_p]
    return rep


def compare_vertical_hypotheses(found: Sequence, lam: float, j_range: tuple[int, int] = (1, 5),
                                extrapolated: bool = False) -> dict[str, float]:
    """Mean matching error of each vertical-branch hypothesis."""
    out = {}
    for hyp in ("printed", "unit"):
        rep = match_branches(found, predict_vertical_branch(lam, j_range, hyp, extrapolated))
        out[hyp] = float(np.mean([e for *_, e in rep.pairs])) if rep.pairs else math.inf
    return out


__all__ = ["BranchPrediction", "branch_constant", "branch_constants", "predict_log_branch",
           "predict_vertical_branch", "match_branches", "MatchReport", "compare_vertical_hypotheses"]
