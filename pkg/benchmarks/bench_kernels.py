"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--nr 512 --nt 128 --repeat 20]

Kernel timings run in-process against both implementations; the end-to-end
solve runs once per backend in a subprocess with HYPCALORON_BACKEND set.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from hypcaloron import kernels

SOLVE = """
import json, time
from hypcaloron.geometry import PhysicalParams
from hypcaloron.grid import StripGrid
from hypcaloron.solver import solve
from hypcaloron.sources import SourceData, VortexConfig
p = PhysicalParams(2.0, 2.0)
src = SourceData(VortexConfig(((1.0, 0.0),), 2.0))
g = StripGrid({nr}, {nt}, 14.0, 2.0)
solve(None, src, p, StripGrid(32, 8, 14.0, 2.0))  # compile / warm up
t0 = time.perf_counter()
v, rep = solve(None, src, p, g)
print(json.dumps({{"seconds": time.perf_counter() - t0, "newton": rep.iterations, "vmin": float(v.values.min())}}))
"""


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(nr, nt, repeat):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(nr, nt))
    diag = rng.uniform(0.0, 3.0, size=(nr, nt))
    f = rng.normal(size=(nr + 1, nt))
    sub = -np.ones(nr)
    sup = -np.ones(nr)
    dg = np.full(nr, 2.5)
    shift = rng.uniform(0.0, 1.0, nt)
    rhs = rng.normal(size=(nr, nt))
    rows = []
    for name, impl in sorted(kernels.implementations().items()):
        out = np.empty_like(x)
        lap = np.empty_like(f)
        impl.apply_operator(x, diag, 0.1, 0.2, out)  # compile outside the timing
        impl.laplacian5(f, 0.1, 0.2, lap)
        impl.tridiag_modes(sub, dg, sup, shift, rhs.copy())
        rows.append({
            "backend": name,
            "apply_operator": best(lambda: impl.apply_operator(x, diag, 0.1, 0.2, out), repeat),
            "laplacian5": best(lambda: impl.laplacian5(f, 0.1, 0.2, lap), repeat),
            "tridiag_modes": best(lambda: impl.tridiag_modes(sub, dg, sup, shift, rhs.copy()), repeat),
        })
    return rows


def bench_solve(nr, nt):
    out = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, HYPCALORON_BACKEND=backend)
        proc = subprocess.run([sys.executable, "-c", SOLVE.format(nr=nr, nt=nt)], env=env,
                              capture_output=True, text=True, check=True)
        out[backend] = json.loads(proc.stdout)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nr", type=int, default=512)
    ap.add_argument("--nt", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--no-solve", action="store_true", help="skip the end-to-end solve")
    args = ap.parse_args(argv)

    rows = bench_kernels(args.nr, args.nt, args.repeat)
    print(f"kernels on {args.nr}x{args.nt}, best of {args.repeat} (ms)")
    print(f"{'backend':8s} {'apply_operator':>15s} {'laplacian5':>11s} {'tridiag_modes':>14s}")
    for r in rows:
        print(f"{r['backend']:8s} {1e3 * r['apply_operator']:15.3f} {1e3 * r['laplacian5']:11.3f} "
              f"{1e3 * r['tridiag_modes']:14.3f}")
    if not args.no_solve:
        res = bench_solve(args.nr, args.nt)
        print(f"\nN=1 solve on {args.nr}x{args.nt}")
        for name, r in res.items():
            print(f"{name:8s} {r['seconds']:8.3f} s  newton={r['newton']}  min v={r['vmin']:.12f}")
        print(f"speedup  {res['numpy']['seconds'] / res['numba']['seconds']:.2f}x")


if __name__ == "__main__":
    main()
