"""Compare the numba and numpy kernels on paper-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 200]

Prints median wall time per call for each kernel and backend, plus the
max absolute difference between the two outputs.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from s3doa import kernels
from s3doa.beamforming import optimal_weights, region_matrix
from s3doa.geometry import make_nested, make_shift_windows, make_ula
from s3doa.model import reference_scene, synthesize_snapshot


def median_time(fn, args, repeat):
    fn(*args)  # warm-up / JIT compile
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def cases():
    snap = synthesize_snapshot(make_ula(89), reference_scene(), 0.3, seed=1)
    sub = make_nested(8, 8).as_array().astype(np.int64)
    starts = np.array([w.start for w in make_shift_windows(18, 8)], dtype=np.int64)
    wconj = optimal_weights(region_matrix(11, 10, 40)).w.conj()
    yield "gather_combine  16x8, L=11", "gather_combine", (snap.y, sub, starts, 8, wconj)

    big = synthesize_snapshot(make_ula(264), reference_scene(), 0.3, seed=2)
    yield ("gather_combine  16x74, L=1", "gather_combine",
           (big.y, np.arange(16, dtype=np.int64), np.zeros(1, np.int64), 74, np.ones(1, complex)))

    rng = np.random.default_rng(3)
    for cols, grid in ((3, 2000), (3, 20000), (13, 20000)):
        basis, _ = np.linalg.qr(rng.standard_normal((16, cols)) + 1j * rng.standard_normal((16, cols)))
        yield f"subspace_power  16x{cols}, G={grid}", "subspace_power", (basis, sub, grid)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if not kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<32}{'numpy us':>12}{'numba us':>12}{'speedup':>10}{'max diff':>12}")
    for label, name, inputs in cases():
        f_np = getattr(kernels, f"{name}_numpy")
        f_nb = getattr(kernels, f"{name}_numba")
        t_np = median_time(f_np, inputs, args.repeat)
        t_nb = median_time(f_nb, inputs, args.repeat)
        diff = np.abs(f_np(*inputs) - f_nb(*inputs)).max()
        print(f"{label:<32}{t_np * 1e6:12.1f}{t_nb * 1e6:12.1f}{t_np / t_nb:10.2f}{diff:12.2e}")


if __name__ == "__main__":
    main()
