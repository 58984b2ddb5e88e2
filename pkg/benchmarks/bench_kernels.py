"""Compare the compiled and numpy right-hand-side kernels.

    python3 benchmarks/bench_kernels.py [--sizes 2 4 6] [--repeat 5]

Prints the best-of-``repeat`` time per call for ``density_rhs`` and
``cavity_drive`` on random Hermitian states, the speed-up, and the largest
difference between the two backends.
"""

import argparse
import timeit

import numpy as np

from cavityhall._kernels import ALL_PARTS, _numpy
from cavityhall.lattice import ModelParams

try:
    from cavityhall._kernels import _rhs_ext
except ImportError:
    _rhs_ext = None


def _per_call(fn, args, repeat):
    t = timeit.Timer(lambda: fn(*args))
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def bench(L, repeat, rng):
    p = ModelParams(lam=0.5, omega=0.5, delta=0.5, flux="2/5", lattice_size=L)
    a = rng.normal(size=(L * L, L * L)) + 1j * rng.normal(size=(L * L, L * L))
    rho = 0.5 * (a + a.conj().T) / L
    ph = p.column_phases()
    rhs_args = (rho, 0.3 - 0.2j, L, p.lam, p.omega, ph, p.fluct_rate, ALL_PARTS)
    drive_args = (rho, L, p.lam, p.omega, ph)
    rows = []
    for name, args in (("density_rhs", rhs_args), ("cavity_drive", drive_args)):
        t_np = _per_call(getattr(_numpy, name), args, repeat)
        if _rhs_ext is None:
            rows.append((name, L, t_np, None, None))
            continue
        t_c = _per_call(getattr(_rhs_ext, name), args, repeat)
        diff = np.abs(np.asarray(getattr(_rhs_ext, name)(*args)) - np.asarray(getattr(_numpy, name)(*args))).max()
        rows.append((name, L, t_np, t_c, diff))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if _rhs_ext is None:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'kernel':<13}{'L':>3}{'numpy [us]':>13}{'compiled [us]':>15}{'speed-up':>10}{'max diff':>11}")
    for L in args.sizes:
        for name, L_, t_np, t_c, diff in bench(L, args.repeat, rng):
            if t_c is None:
                print(f"{name:<13}{L_:>3}{t_np * 1e6:>13.1f}{'-':>15}{'-':>10}{'-':>11}")
            else:
                print(f"{name:<13}{L_:>3}{t_np * 1e6:>13.1f}{t_c * 1e6:>15.1f}{t_np / t_c:>10.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
