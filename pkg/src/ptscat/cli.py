"""Command-line front end.

    ptscat {resonances,scattering,branches,reconstruct,verify} --config run.json
           [--out DIR] [--threads N] [--cache DIR] [--seed S]

Exit codes: 0 ok, 1 compute failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import asymptotics as asy
from . import hadamard as hd
from . import kernel as kn
from . import pt_exact as pe
from . import specfun as sf
from ._backend import NAME as BACKEND
from .errors import ConfigError, PtscatError
from .perturbed import Problem, scattering_batch
from .records import ZeroRecord, from_normalized
from .resonances import SearchRegion, ball_centers, find_zeros, mirror_defect

COMMANDS = ("resonances", "scattering", "branches", "reconstruct", "verify")

ZEROS_COLUMNS = ("re", "im", "multiplicity", "kind", "residual")
SCATTERING_COLUMNS = ("z_re", "z_im", "W_re", "W_im", "S_plus_re", "S_plus_im", "S_minus_re", "S_minus_im",
                      "T_re", "T_im", "R_plus_re", "R_plus_im", "R_minus_re", "R_minus_im",
                      "unitarity_residual")
OVERLAY_COLUMNS = ("layer", "j", "re", "im", "radius")
RECONSTRUCT_COLUMNS = ("target", "z_re", "z_im", "model_re", "model_im", "truth_re", "truth_im", "rel_error")
VERIFY_COLUMNS = ("check", "passed", "value", "tolerance")

DEFAULT_PROBES = (1 + 1j, -1 + 1j, 0.5, 2 - 0.5j, -1.5 - 1j, 0.3 + 2j, -0.7 - 0.2j, 1.2 + 0.4j,
                  -2 + 1.5j, 0.1 - 1.3j)

EPILOG = f"""\
config (JSON):
  lambda        nonzero real (required)
  q             {{"breakpoints": [...], "coefficients": [[...], ...]}}, monomial
                coefficients in global x per piece; omitted means q = 0
  grid_n, tol, levels   kernel solve (256, 1e-10, 2)
  rect          [re_min, re_max, im_min, im_max] (resonances, branches, reconstruct)
  search        {{delta, eta, contour_points, newton_tol, max_evals}}
  j_range       [lo, hi] log-branch indices (branches; default [6, 12])
  vertical_j_range, convention ("corrected" | "printed")
  scattering    {{"real": [start, stop, num], "mesh": [re0, re1, im0, im1, nx, ny]}}
  reconstruct   {{"target": "W" | "S_plus" | "S_minus", "N": 400,
                 "probes": [[re, im], ...], "support_hint": ..., "p_sign": +-1}}

outputs (CSV floats carry 17 significant digits, columns in this order):
  zeros.csv        {",".join(ZEROS_COLUMNS)}
  scattering.csv   {",".join(SCATTERING_COLUMNS)}
                   (unitarity_residual is nan off the real axis)
  branches.csv     {",".join(OVERLAY_COLUMNS)}
                   layers: found, log_branch, vertical_branch, sector_boundary, ball
  reconstruct.csv  {",".join(RECONSTRUCT_COLUMNS)}
  verify.csv       {",".join(VERIFY_COLUMNS)}
  plus zeros.json, branches.json (match report), reconstruct.json, verify.json

exit codes: 0 ok, 1 compute failure, 2 configuration error
"""


# ----------------------------------------------------------------- config

@dataclass
class RunConfig:
    command: str
    lam: float
    q: kn.PerturbationSpec | None = None
    grid_n: int = 256
    tol: float = 1e-10
    levels: int = 2
    rect: tuple[float, float, float, float] | None = None
    search: dict = field(default_factory=dict)
    j_range: tuple[int, int] = (6, 12)
    vertical_j_range: tuple[int, int] = (1, 5)
    convention: str = "corrected"
    scattering: dict = field(default_factory=dict)
    reconstruct: dict = field(default_factory=dict)
    out: Path = Path(".")
    threads: int = 1
    cache: Path | None = None
    seed: int | None = None

    def region(self) -> SearchRegion:
        return SearchRegion(self.rect, **self.search)


def _num(obj: dict, key: str, kind: type, default: Any = None, required: bool = False):
    if key not in obj:
        if required:
            raise ConfigError(f"field '{key}': required")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not float(v).is_integer()):
        raise ConfigError(f"field '{key}': expected {kind.__name__}, got {v!r}")
    if not math.isfinite(float(v)):
        raise ConfigError(f"field '{key}': must be finite")
    return kind(v)


def _pair(obj: dict, key: str, default):
    v = obj.get(key, default)
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(k, int) for k in v)):
        raise ConfigError(f"field '{key}': expected two integers")
    if not 1 <= v[0] <= v[1]:
        raise ConfigError(f"field '{key}': need 1 <= lo <= hi")
    return (int(v[0]), int(v[1]))


def _rect(obj: dict, key: str = "rect"):
    v = obj.get(key)
    if v is None:
        return None
    if not (isinstance(v, list) and len(v) == 4 and all(isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"field '{key}': expected [re_min, re_max, im_min, im_max]")
    r = tuple(float(x) for x in v)
    if not (r[0] < r[1] and r[2] < r[3]) or not all(map(math.isfinite, r)):
        raise ConfigError(f"field '{key}': need finite re_min < re_max and im_min < im_max")
    return r


def load_config(path: str | os.PathLike, command: str, out: str | None = None, threads: int = 1,
                cache: str | None = None, seed: int | None = None) -> RunConfig:
    """Parse and validate a JSON run configuration for ``command``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(obj, command, out, threads, cache, seed)


def config_from_dict(obj: Any, command: str, out: str | None = None, threads: int = 1,
                     cache: str | None = None, seed: int | None = None) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if "command" in obj and obj["command"] != command:
        raise ConfigError(f"field 'command': config is for {obj['command']!r}, invoked as {command!r}")
    lam = _num(obj, "lambda", float, required=True)
    if lam == 0.0:
        raise ConfigError("field 'lambda': must be a nonzero real number")
    q = None
    if obj.get("q") is not None:
        qo = obj["q"]
        if not isinstance(qo, dict) or "breakpoints" not in qo or "coefficients" not in qo:
            raise ConfigError("field 'q': expected {breakpoints: [...], coefficients: [[...]]}")
        try:
            q = kn.PerturbationSpec.from_json(qo)
        except (PtscatError, TypeError, ValueError) as exc:
            raise ConfigError(f"field 'q': {exc}") from None
    cfg = RunConfig(command, lam, q)
    cfg.grid_n = _num(obj, "grid_n", int, 256)
    cfg.tol = _num(obj, "tol", float, 1e-10)
    cfg.levels = _num(obj, "levels", int, 2)
    if cfg.grid_n < 16 or cfg.tol <= 0 or cfg.levels < 0:
        raise ConfigError("fields 'grid_n'/'tol'/'levels': need grid_n >= 16, tol > 0, levels >= 0")
    cfg.rect = _rect(obj)
    search = obj.get("search", {})
    if not isinstance(search, dict):
        raise ConfigError("field 'search': expected an object")
    allowed = {"delta": float, "eta": float, "contour_points": int, "newton_tol": float, "max_evals": int}
    for k in search:
        if k not in allowed:
            raise ConfigError(f"field 'search.{k}': unknown key")
    cfg.search = {k: _num(search, k, t) for k, t in allowed.items() if k in search}
    cfg.j_range = _pair(obj, "j_range", [6, 12])
    cfg.vertical_j_range = _pair(obj, "vertical_j_range", [1, 5])
    cfg.convention = obj.get("convention", "corrected")
    if cfg.convention not in asy.CONVENTIONS:
        raise ConfigError(f"field 'convention': one of {asy.CONVENTIONS}")
    cfg.scattering = obj.get("scattering", {}) or {}
    cfg.reconstruct = obj.get("reconstruct", {}) or {}
    cfg.out = Path(out) if out is not None else Path(obj.get("out", "."))
    cfg.threads = int(threads)
    if cfg.threads < 1:
        raise ConfigError("--threads must be at least 1")
    cfg.cache = Path(cache) if cache is not None else (Path(obj["cache"]) if obj.get("cache") else None)
    cfg.seed = seed
    _validate_command(cfg)
    return cfg


def _validate_command(cfg: RunConfig) -> None:
    if cfg.command in ("resonances", "branches") and cfg.rect is None:
        raise ConfigError(f"field 'rect': required for {cfg.command}")
    if cfg.rect is not None:
        try:
            cfg.region()
        except (PtscatError, TypeError) as exc:
            raise ConfigError(f"field 'search': {exc}") from None
    if cfg.command == "branches" and cfg.q is None:
        raise ConfigError("field 'q': branches needs a nonzero perturbation")
    if cfg.command == "scattering":
        sc = cfg.scattering
        if not isinstance(sc, dict) or not ({"real", "mesh"} & set(sc)):
            raise ConfigError("field 'scattering': give 'real' and/or 'mesh'")
        if "real" in sc:
            r = sc["real"]
            if not (isinstance(r, list) and len(r) == 3 and r[0] < r[1] and int(r[2]) >= 1):
                raise ConfigError("field 'scattering.real': expected [start, stop, num]")
        if "mesh" in sc:
            m = sc["mesh"]
            if not (isinstance(m, list) and len(m) == 6 and m[0] < m[1] and m[2] < m[3]
                    and int(m[4]) >= 1 and int(m[5]) >= 1):
                raise ConfigError("field 'scattering.mesh': expected [re0, re1, im0, im1, nx, ny]")
    if cfg.command == "reconstruct":
        rc = cfg.reconstruct
        if not isinstance(rc, dict):
            raise ConfigError("field 'reconstruct': expected an object")
        tgt = rc.get("target", "W")
        if tgt not in ("W", "S_plus", "S_minus"):
            raise ConfigError("field 'reconstruct.target': W, S_plus or S_minus")
        if (cfg.q is not None or tgt != "W") and cfg.rect is None:
            raise ConfigError("field 'rect': reconstruct needs a zero-search rect for forward zeros")
        if tgt != "W" and cfg.q is None:
            raise ConfigError("field 'q': S reconstruction needs a nonzero perturbation")
        if "p_sign" in rc and rc["p_sign"] not in (1, -1):
            raise ConfigError("field 'reconstruct.p_sign': must be +1 or -1")
        if "support_hint" in rc and rc["support_hint"] not in ("origin_inside", "R_minus", "R_plus"):
            raise ConfigError("field 'reconstruct.support_hint': origin_inside, R_minus or R_plus")
        if "N" in rc and (not isinstance(rc["N"], int) or rc["N"] < 20):
            raise ConfigError("field 'reconstruct.N': integer >= 20")


# ----------------------------------------------------------------- plumbing

def _kernel(cfg: RunConfig, side: str) -> kn.KernelGrid:
    key = kn.cache_key(cfg.q, cfg.lam, side, cfg.grid_n, cfg.tol, cfg.levels)
    path = cfg.cache / f"kernel-{key}.npz" if cfg.cache is not None else None
    if path is not None and path.exists():
        K = kn.KernelGrid.from_npz(path)
        want = cfg.q if side == "plus" else cfg.q.mirrored()
        if (K.side, K.q, K.lam, K.tol, K.levels) == (side, want, cfg.lam, cfg.tol, cfg.levels):
            return K
    K = kn.solve_kernel(cfg.q, cfg.lam, side, cfg.grid_n, cfg.tol, cfg.levels)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(suffix=".npz", dir=path.parent)
        os.close(fd)
        K.to_npz(tmp)
        os.replace(tmp, path)
    return K


def _problem(cfg: RunConfig) -> Problem | None:
    if cfg.q is None:
        return None
    return Problem(cfg.q, cfg.lam, Kp=_kernel(cfg, "plus"), Km=_kernel(cfg, "minus"))


def _W(cfg: RunConfig, prob: Problem | None) -> Callable[[complex], complex]:
    if prob is None:
        params = pe.PTParams(cfg.lam)
        return lambda z: pe.W0(params, z)
    return prob.W


def _S(cfg: RunConfig, prob: Problem | None, side: int) -> Callable[[complex], complex]:
    if prob is None:
        s = pe.S0(pe.PTParams(cfg.lam))
        return lambda z: s
    return lambda z: prob.S(z, side)


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


class Outputs:
    """Stage files in a scratch directory; move them into place only on success."""

    def __init__(self, out: Path):
        self.out = out
        self.stage: Path | None = None

    def __enter__(self) -> "Outputs":
        self.out.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=".ptscat-", dir=self.out))
        return self

    def csv(self, name: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        with open(self.stage / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])

    def json(self, name: str, obj: Any) -> None:
        with open(self.stage / name, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")

    def __exit__(self, exc_type, exc, tb) -> None:
        try:
            if exc_type is None:
                for p in sorted(self.stage.iterdir()):
                    os.replace(p, self.out / p.name)
        finally:
            shutil.rmtree(self.stage, ignore_errors=True)


def _json_default(o: Any):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _config_echo(cfg: RunConfig) -> dict:
    return {"lambda": cfg.lam, "q": cfg.q.to_json() if cfg.q is not None else None,
            "grid_n": cfg.grid_n, "tol": cfg.tol, "levels": cfg.levels,
            "rect": list(cfg.rect) if cfg.rect else None}


def _zero_rows(zs: Sequence[ZeroRecord]):
    return [(z.location.real, z.location.imag, z.multiplicity, z.kind, z.residual) for z in zs]


def _search_zeros(cfg: RunConfig, f: Callable[[complex], complex]) -> list[ZeroRecord]:
    return find_zeros(f, cfg.region())


# ----------------------------------------------------------------- commands

def cmd_resonances(cfg: RunConfig) -> int:
    prob = _problem(cfg)
    zeros = _search_zeros(cfg, _W(cfg, prob))
    with Outputs(cfg.out) as out:
        out.json("zeros.json", {"config": _config_echo(cfg), "zeros": [z.to_json() for z in zeros]})
        out.csv("zeros.csv", ZEROS_COLUMNS, _zero_rows(zeros))
    return 0


def _scattering_points(sc: dict) -> list[complex]:
    pts: list[complex] = []
    if "real" in sc:
        a, b, n = sc["real"]
        pts += [complex(x) for x in np.linspace(a, b, int(n))]
    if "mesh" in sc:
        x0, x1, y0, y1, nx, ny = sc["mesh"]
        for y in np.linspace(y0, y1, int(ny)):
            for x in np.linspace(x0, x1, int(nx)):
                pts.append(complex(x, y))
    return pts


def cmd_scattering(cfg: RunConfig) -> int:
    prob = _problem(cfg)
    pts = _scattering_points(cfg.scattering)
    if prob is None:
        params = pe.PTParams(cfg.lam)
        data = [pe.scattering0(params, z) for z in pts]
    else:
        data = scattering_batch(prob, pts, cfg.threads)
    rows = []
    for d in data:
        unit = d.unitarity_residual() if d.z.imag == 0 else math.nan
        rows.append((d.z.real, d.z.imag, d.W.real, d.W.imag, d.S_plus.real, d.S_plus.imag,
                     d.S_minus.real, d.S_minus.imag, d.T.real, d.T.imag, d.R_plus.real, d.R_plus.imag,
                     d.R_minus.real, d.R_minus.imag, unit))
    with Outputs(cfg.out) as out:
        out.csv("scattering.csv", SCATTERING_COLUMNS, rows)
    return 0


def branch_report(cfg: RunConfig, zeros: Sequence[ZeroRecord]) -> tuple[dict, list[tuple]]:
    """Predictions and matches for every branch family that applies to q."""
    q = cfg.q
    report: dict[str, Any] = {"config": _config_echo(cfg), "families": []}
    rows: list[tuple] = [("found", 0, z.location.real, z.location.imag, math.nan) for z in zeros]
    preds = []
    if q.p is not None and q.r is not None:
        preds.append(asy.predict_log_branch(q, cfg.j_range, cfg.convention, require_origin=False))
    if q.alpha >= 0 or q.beta <= 0:
        preds.append(asy.predict_vertical_branch(cfg.lam, cfg.vertical_j_range, "printed",
                                                 extrapolated=cfg.lam > 0.25))
    for pred in preds:
        fam = {"kind": pred.kind, "convention": pred.convention, "flags": list(pred.flags),
               "A": pred.A, "C": pred.C, "p": pred.p, "r": pred.r}
        if zeros:
            fam["match"] = asy.match_branches(zeros, pred).to_json()
            fam["match"]["real_spacing"] = asy.match_branches(zeros, pred).real_spacing()
        else:
            fam["match"] = None
        report["families"].append(fam)
        rows += [(pred.kind, j, z.real, z.imag, math.nan) for j, z in zip(pred.js, pred.points)]
    report["mixed"] = len({p.kind for p in preds}) > 1
    x0, x1, y0, y1 = cfg.rect
    delta = cfg.search.get("delta", 1.0)
    eta = cfg.search.get("eta", 0.3)
    if y0 < 0:
        ybot = y0
        for sgn, j in ((-1, -1), (1, 1)):
            rows.append(("sector_boundary", j, 0.0, 0.0, math.nan))
            rows.append(("sector_boundary", j, sgn * delta * -ybot, ybot, math.nan))
    rows += [("ball", 0, c.real, c.imag, eta) for c in ball_centers(cfg.rect, eta)]
    report["sector"] = {"delta": delta, "eta": eta}
    return report, rows


def cmd_branches(cfg: RunConfig) -> int:
    prob = _problem(cfg)
    zeros = _search_zeros(cfg, prob.W)
    report, rows = branch_report(cfg, zeros)
    report["zeros"] = [z.to_json() for z in zeros]
    with Outputs(cfg.out) as out:
        out.json("branches.json", report)
        out.csv("branches.csv", OVERLAY_COLUMNS, rows)
    return 0


def _probes(cfg: RunConfig) -> list[complex]:
    raw = cfg.reconstruct.get("probes")
    pts = [complex(p[0], p[1]) for p in raw] if raw else list(DEFAULT_PROBES)
    if cfg.seed is not None:
        rng = np.random.default_rng(cfg.seed)
        jit = rng.uniform(-0.05, 0.05, size=(len(pts), 2))
        pts = [z + complex(a, b) for z, (a, b) in zip(pts, jit)]
    return pts


def _support_hint(q: kn.PerturbationSpec) -> str:
    if q.beta <= 0:
        return "R_minus"
    if q.alpha >= 0:
        return "R_plus"
    return "origin_inside"


def cmd_reconstruct(cfg: RunConfig) -> int:
    rc = cfg.reconstruct
    target = rc.get("target", "W")
    prob = _problem(cfg)
    probes = _probes(cfg)
    if target == "W":
        truth = _W(cfg, prob)
        if prob is None:
            N = int(rc.get("N", 400))
            zeros = [r.location for r in pe.resonances_closed_form(pe.PTParams(cfg.lam), N)
                     for _ in range(r.multiplicity)]
            zeros = sorted(zeros, key=abs)[:N]
        else:
            zeros = _search_zeros(cfg, truth)
        model = hd.fit_W(zeros)
    else:
        side = 1 if target == "S_plus" else -1
        truth = _S(cfg, prob, side)
        zeros = _search_zeros(cfg, truth)
        model = hd.fit_S(zeros, side, rc.get("support_hint", _support_hint(cfg.q)), lam=cfg.lam,
                         W=prob.W, p_sign=rc.get("p_sign"))
    rows = []
    for z in probes:
        m, t = complex(model(z)), complex(truth(z))
        rows.append((target, z.real, z.imag, m.real, m.imag, t.real, t.imag, abs(m / t - 1)))
    with Outputs(cfg.out) as out:
        out.json("reconstruct.json", {"config": _config_echo(cfg), "model": model.to_json(),
                                      "max_rel_error": max(r[-1] for r in rows)})
        out.csv("reconstruct.csv", RECONSTRUCT_COLUMNS, rows)
    return 0


# ----------------------------------------------------------------- verify

def invariant_suite(cfg: RunConfig) -> list[tuple[str, bool, float, float]]:
    """Cheap versions of the module invariants for the configured (q, lambda)."""
    checks: list[tuple[str, bool, float, float]] = []

    def add(name: str, value: float, tol: float) -> None:
        checks.append((name, bool(value <= tol), float(value), tol))

    rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
    zs = [complex(a, b) for a, b in rng.uniform(-4, 4, size=(12, 2))]
    reals = list(rng.uniform(-6, 6, size=8))

    # special functions
    refl = max(abs(sf.gamma(z) * sf.gamma(1 - z) * sf.sinpi(z) / math.pi - 1) for z in zs)
    add("specfun.gamma_reflection", refl, 1e-12)
    add("specfun.rgamma_poles", max(abs(sf.rgamma(-k)) for k in range(6)), 0.0)

    # closed-form layer
    params = pe.PTParams(cfg.lam)
    add("pt_exact.mu_branch", 0.0 if pe.mu_branch_ok(params) else 1.0, 0.0)
    wr = max(abs(pe.wronskian(pe.jost0_minus(params, 0.3, z, True), pe.jost0_plus(params, 0.3, z, True))
                 / pe.W0(params, z) - 1) for z in zs)
    add("pt_exact.wronskian_closed_form", wr, 1e-9)
    res0 = max(r.residual for r in pe.resonances_closed_form(params, 6))
    add("pt_exact.closed_form_zero_residual", res0, 1e-10)
    add("pt_exact.unitarity", max(pe.scattering0(params, x).unitarity_residual() for x in reals), 1e-10)

    prob = _problem(cfg)
    W = _W(cfg, prob)
    if prob is not None:
        q = cfg.q
        K = prob.Kp
        xs = np.linspace(q.alpha, q.beta, 9)
        diag = np.array([K.value(x, x) for x in xs])
        exact = np.array([0.5 * q.integral(x, q.beta) for x in xs])
        add("kernel.diagonal", float(np.max(np.abs(diag - exact))), 1e-8)
        add("kernel.outer_characteristic", float(np.max(np.abs(K.values[0, :]))), 1e-10)
        bound = kn.apriori_bound(q, cfg.lam)
        add("kernel.apriori_bound_excess", max(0.0, float(np.max(np.abs(K.values))) - bound), 0.0)

        conj = max(abs(W(-z.conjugate()) - W(z).conjugate()) / abs(W(z)) for z in zs)
        add("perturbed.conjugation_symmetry", conj, 1e-7)
        unit = max(prob.scattering(x).unitarity_residual() for x in reals)
        add("perturbed.unitarity", unit, 1e-7)
        prod = max(abs(prob.S(z, 1) * prob.S(-z, 1) - hd.product_identity_rhs(W, z))
                   / abs(hd.product_identity_rhs(W, z)) for z in zs)
        add("perturbed.product_identity", prod, 1e-7)
        add("perturbed.W0_plus_S0", abs(W(0.0) + prob.S(0.0, 1)) / abs(W(0.0)), 1e-7)
        par, xind = 0.0, 0.0
        for z in zs[:6]:
            # S- built from its own Wronskian at an interior point vs S+(-z) at beta
            w1, _, sm1 = prob.wronskians_at(0.3, z)
            sp2 = prob.S(-z, 1)
            w2, _, _ = prob.wronskians_at(q.alpha - 0.5, z)
            par = max(par, abs(sm1 - sp2) / abs(sp2))
            xind = max(xind, abs(w1 - w2) / abs(w1))
        add("perturbed.parity", par, 1e-7)
        add("perturbed.x_independence", xind, 1e-7)
        if q.p is not None and q.r is not None:
            pred = asy.predict_log_branch(q, (1, 4), cfg.convention, require_origin=False)
            sym = max(abs(pred.point(-j) + pred.point(j).conjugate()) for j in range(1, 5))
            add("asymptotics.branch_mirror_symmetry", sym, 0.0)

    # resonance finder on a small window
    rect = (-2.0, 2.0, -2.6, 0.4)
    found = find_zeros(W, SearchRegion(rect))
    add("resonances.mirror_defect", mirror_defect(found), 1e-8)
    if prob is None:
        ref = [r for r in pe.resonances_closed_form(params, 4)
               if rect[0] < r.location.real < rect[1] and rect[2] < r.location.imag < rect[3]]
        err = 0.0 if len(ref) == len(found) else math.inf
        for r in ref:
            err = max(err, min(abs(r.location - f.location) for f in found))
        add("resonances.closed_form_match", err, 1e-8)

    # Hadamard: genus-one product stability on the closed-form zero set
    def cz(N):
        out = [r.location for r in pe.resonances_closed_form(params, N) for _ in range(r.multiplicity)]
        return sorted(out, key=abs)[:N]
    m1, m2 = hd.fit_W(cz(800)), hd.fit_W(cz(1600))
    add("hadamard.coefficient_stability", max(abs(m1.a0_or_b0 - m2.a0_or_b0), abs(m1.a1_or_b1 - m2.a1_or_b1)),
        1e-3)
    z = 0.4 + 0.7j
    add("hadamard.conjugation_symmetry", abs(m2(-z.conjugate()) - m2(z).conjugate()) / abs(m2(z)), 1e-12)
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    checks = invariant_suite(cfg)
    ok = all(c[1] for c in checks)
    with Outputs(cfg.out) as out:
        out.csv("verify.csv", VERIFY_COLUMNS, checks)
        out.json("verify.json", {"config": _config_echo(cfg), "passed": ok,
                                 "checks": [dict(zip(VERIFY_COLUMNS, c)) for c in checks]})
    for name, passed, value, tol in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name} value={value:.3e} tol={tol:.1e}")
    return 0 if ok else 1


HANDLERS = {"resonances": cmd_resonances, "scattering": cmd_scattering, "branches": cmd_branches,
            "reconstruct": cmd_reconstruct, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ptscat", description="Perturbed Poschl-Teller scattering and resonances.",
                                 epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (default: config 'out' or .)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for z batches")
    ap.add_argument("--cache", default=None, help="kernel cache directory")
    ap.add_argument("--seed", type=int, default=None, help="seed for probe jitter")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.command, args.out, args.threads, args.cache, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        code = HANDLERS[cfg.command](cfg)
    except (PtscatError, ArithmeticError, ValueError) as exc:
        print(f"compute failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{cfg.command}: done in {time.perf_counter() - t0:.1f}s (backend {BACKEND})", file=sys.stderr)
    return code


__all__ = ["RunConfig", "load_config", "config_from_dict", "main", "invariant_suite", "branch_report",
           "cmd_resonances", "cmd_scattering", "cmd_branches", "cmd_reconstruct", "cmd_verify"]
