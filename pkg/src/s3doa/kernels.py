"""Hot loops: smoothed-matrix assembly and the MUSIC grid scan.

Each kernel has a numba implementation and a pure-numpy one with identical
semantics. ``gather_combine`` dispatches on :data:`s3doa._backend.USE_NUMBA`;
the ``*_numpy`` / ``*_numba`` variants stay importable for benchmarks and
cross-checks.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ._backend import NUMBA_AVAILABLE, USE_NUMBA, njit_opts


def angle_grid(grid_size: int) -> np.ndarray:
    """``grid_size`` angles in degrees, uniform over [-90, 90)."""
    return -90.0 + 180.0 * np.arange(grid_size) / grid_size


# --- smoothed matrix assembly -------------------------------------------------

def gather_combine_numpy(y, sub, starts, p, wconj):
    """``sum_l wconj[l] * y[sub[:, None] + starts[l] + arange(p)]``."""
    idx = sub[None, :, None] + starts[:, None, None] + np.arange(p)[None, None, :]
    stack = y[idx]
    if stack.shape[0] == 1:
        return stack[0] * wconj[0]
    return np.tensordot(wconj, stack, axes=1)


def _gather_combine_loops(y, sub, starts, p, wconj):
    nb = sub.shape[0]
    nl = starts.shape[0]
    out = np.zeros((nb, p), dtype=np.complex128)
    for m in range(nb):
        for l in range(nl):
            base = sub[m] + starts[l]
            w = wconj[l]
            for q in range(p):
                out[m, q] += w * y[base + q]
    return out


# --- MUSIC scan ---------------------------------------------------------------

@lru_cache(maxsize=8)
def _steering_on_grid(positions: tuple, grid_size: int) -> np.ndarray:
    u = np.pi * np.sin(np.deg2rad(angle_grid(grid_size)))
    a = np.exp(1j * np.outer(np.asarray(positions, dtype=float), u))
    a.setflags(write=False)
    return a


def subspace_power_numpy(basis, positions, grid_size):
    """``||basis^H a(theta_g)||^2`` for every grid angle."""
    steer = _steering_on_grid(tuple(int(d) for d in positions), int(grid_size))
    proj = basis.conj().T @ steer
    return (proj.real ** 2 + proj.imag ** 2).sum(axis=0)


def _subspace_power_loops(basis, positions, sin_grid):
    nb, r = basis.shape
    g_count = sin_grid.shape[0]
    out = np.empty(g_count)
    bconj = np.conj(basis)
    acc = np.empty(r, dtype=np.complex128)
    for g in range(g_count):
        u = np.pi * sin_grid[g]
        acc[:] = 0.0
        for m in range(nb):
            ph = u * positions[m]
            a = complex(np.cos(ph), np.sin(ph))
            for j in range(r):
                acc[j] += bconj[m, j] * a
        tot = 0.0
        for j in range(r):
            tot += acc[j].real ** 2 + acc[j].imag ** 2
        out[g] = tot
    return out


if NUMBA_AVAILABLE:
    from numba import njit

    _gather_combine_jit = njit(**njit_opts())(_gather_combine_loops)
    _subspace_power_jit = njit(**njit_opts())(_subspace_power_loops)

    def gather_combine_numba(y, sub, starts, p, wconj):
        return _gather_combine_jit(
            np.ascontiguousarray(y, dtype=np.complex128),
            np.ascontiguousarray(sub, dtype=np.int64),
            np.ascontiguousarray(starts, dtype=np.int64),
            int(p),
            np.ascontiguousarray(wconj, dtype=np.complex128),
        )

    def subspace_power_numba(basis, positions, grid_size):
        sin_grid = np.sin(np.deg2rad(angle_grid(int(grid_size))))
        return _subspace_power_jit(
            np.ascontiguousarray(basis, dtype=np.complex128),
            np.ascontiguousarray(positions, dtype=np.float64),
            sin_grid,
        )
else:  # pragma: no cover
    gather_combine_numba = None
    subspace_power_numba = None


gather_combine = gather_combine_numba if USE_NUMBA else gather_combine_numpy
# The grid scan stays on numpy under both backends: a cached steering matrix
# plus one BLAS product beats recomputing phases in a jitted loop by ~10x
# (see benchmarks/bench_kernels.py).
subspace_power = subspace_power_numpy


def warmup() -> None:
    """Trigger JIT compilation so first timed calls are not penalized."""
    y = np.ones(8, dtype=np.complex128)
    sub = np.array([0, 1, 3], dtype=np.int64)
    gather_combine(y, sub, np.array([0, 1], dtype=np.int64), 2, np.ones(2, complex))
    subspace_power(np.eye(3, 1, dtype=np.complex128), sub, 4)
