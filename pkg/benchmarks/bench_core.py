"""Compare the compiled series kernel with the numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time (PTSCAT_BACKEND=python forces the fallback).

    python benchmarks/bench_core.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
from ptscat import _backend, specfun as sf, pt_exact as pe
from ptscat.kernel import PerturbationSpec
from ptscat.perturbed import Problem

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
zeta = (rng.uniform(0, 0.8, 512) * np.exp(1j * rng.uniform(0, 2 * np.pi, 512))).astype(complex)
head = np.array([1.0 + 0j])
a, b, c = 0.5 + 0.8j, 0.5 - 0.8j, 1.0 - 2.0j
P = pe.PTParams(1.0)
zs = [complex(x, y) for x, y in rng.uniform(-5, 5, (64, 2))]
xs = rng.uniform(-2, 2, 64)
prob = Problem(PerturbationSpec.box(-1.0, 1.0), 1.0, grid_n=128)

cases = {
    "hyp_series, 512 points": lambda: _backend.hyp_series(a, b, c, zeta, head, 1e-16, 4, 100000),
    "jost0_plus, 64 calls": lambda: [pe.jost0_plus(P, x, z, True) for x, z in zip(xs, zs)],
    "W0 closed form, 64 calls": lambda: [pe.W0(P, z) for z in zs],
    "perturbed W, 16 calls": lambda: [prob.W(z) for z in zs[:16]],
}
out = {"backend": _backend.NAME}
for name, fn in cases.items():
    fn()
    out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
print(json.dumps(out))
"""


def run(backend: str, repeat: int) -> dict:
    env = dict(os.environ)
    if backend == "python":
        env["PTSCAT_BACKEND"] = "python"
    else:
        env.pop("PTSCAT_BACKEND", None)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run("cython", args.repeat), run("python", args.repeat)
    if fast["backend"] != "cython":
        print("compiled extension not built; both columns use the numpy fallback")
    print(f"{'case':28s} {fast['backend']:>10s} {'python':>10s} {'speedup':>8s}")
    for key in fast:
        if key == "backend":
            continue
        f, s = fast[key], slow[key]
        print(f"{key:28s} {f * 1e3:9.2f}ms {s * 1e3:9.2f}ms {s / f:7.1f}x")


if __name__ == "__main__":
    main()
