"""Compare the compiled and pure-numpy sweep kernels.

Times coordinate sweeps on tridiagonal and dense systems of increasing size,
plus one end-to-end nonlocal solve, under each available backend.  Run as

    python3 benchmarks/benchmark_kernels.py
    python3 benchmarks/benchmark_kernels.py --sizes 256 1024 --json out.json
"""

import argparse
import json
import time

import numpy as np

from deadcore import GridSpec, ReactionSpec, assemble, kernels, make_grid, solve
from deadcore.profiles import odd_exterior_builder


def _select(backend):
    """Switch to a backend, or report it unavailable."""
    kernels.set_backend(backend)
    try:
        return kernels.current_backend() == backend
    except RuntimeError:
        return False


def _tridiag_case(n, rng):
    dl = np.full(n - 1, -1.0)
    d = np.full(n, 4.0)
    b = rng.standard_normal(n)
    return dl, d, dl.copy(), b


def _dense_case(n, rng):
    A = np.eye(n) * 4.0
    idx = np.arange(n - 1)
    A[idx, idx + 1] = -1.0
    A[idx + 1, idx] = -1.0
    A += 0.01 / n * rng.random((n, n))
    return 0.5 * (A + A.T), rng.standard_normal(n)


def bench_sweeps(sizes, sweeps, repeats):
    rng = np.random.default_rng(1)
    rows = []
    for n in sizes:
        dl, d, du, b = _tridiag_case(n, rng)
        A, bd = _dense_case(min(n, 2048), rng)
        for label, fn, args in [
            ("tridiag", kernels.gs_polish_tridiag, (dl, d, du, b)),
            ("dense", kernels.gs_polish_dense, (A, bd)),
        ]:
            m = len(args[-1])
            timings = {}
            for backend in ("numba", "numpy"):
                if not _select(backend):
                    continue
                best = np.inf
                for _ in range(repeats):
                    u = np.zeros(m)
                    t0 = time.perf_counter()
                    fn(*args, u, 0.2, False, sweeps)
                    best = min(best, time.perf_counter() - t0)
                timings[backend] = best
            rows.append({"kernel": label, "n": m, "sweeps": sweeps, **timings})
    return rows


def bench_solve(repeats):
    grid = make_grid(GridSpec(h=1 / 64, a=1.0, R=4.0))
    op = assemble(grid, 0.75)
    g = odd_exterior_builder(grid, "ramp", 2.0)
    row = {"kernel": "solve", "n": grid.interior.size, "sweeps": None}
    for backend in ("numba", "numpy"):
        if not _select(backend):
            continue
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            rep = solve(op, g, ReactionSpec(gamma=0.2))
            best = min(best, time.perf_counter() - t0)
        assert rep.converged
        row[backend] = best
    return [row]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    parser.add_argument("--sweeps", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--json", help="also dump the rows to this file")
    args = parser.parse_args(argv)

    kernels.warmup()
    rows = bench_sweeps(args.sizes, args.sweeps, args.repeats)
    rows += bench_solve(args.repeats)

    print(f"{'kernel':<8} {'n':>6} {'numba [s]':>12} {'numpy [s]':>12} {'speedup':>8}")
    for row in rows:
        tn, tp = row.get("numba"), row.get("numpy")
        ratio = f"{tp / tn:.1f}x" if tn and tp else "n/a"
        print(
            f"{row['kernel']:<8} {row['n']:>6} "
            f"{tn if tn is not None else float('nan'):>12.4g} "
            f"{tp if tp is not None else float('nan'):>12.4g} {ratio:>8}"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
        print(f"wrote {args.json}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
