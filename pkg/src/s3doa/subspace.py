"""Spectral MUSIC on a (combined) smoothed matrix."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidSizeError, NumericalError, SubspaceDimensionError
from .geometry import ArrayGeometry, ShiftWindow, longest_ula_segment
from .model import Snapshot
from .smoothing import SmoothedMatrix, smooth_combined

SPECTRUM_CAP = 1e16

angle_grid = kernels.angle_grid


class IdentifiabilityWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class PseudoSpectrum:
    grid: np.ndarray
    values: np.ndarray

    def to_db(self) -> np.ndarray:
        """Values in dB relative to the spectrum maximum."""
        return 10.0 * np.log10(self.values / self.values.max())


@dataclass(frozen=True, eq=False)
class SmoothingScheme:
    """What :func:`estimate_doas` needs: sub-array, windows, optional weights."""

    sub_array: ArrayGeometry
    windows: tuple[ShiftWindow, ...]
    weights: np.ndarray | None = None

    @property
    def window_length(self) -> int:
        return self.windows[0].length


def _matrix(Y) -> np.ndarray:
    return Y.data if isinstance(Y, SmoothedMatrix) else np.asarray(Y)


def _check_k(k: int, nb: int, p: int) -> None:
    if k < 1 or k >= nb or k > p:
        raise SubspaceDimensionError(
            f"k={k} sources needs 1 <= k < N_b={nb} and k <= P={p}"
        )


def _svd(data: np.ndarray, full: bool):
    if not np.all(np.isfinite(data)):
        raise NumericalError("smoothed matrix contains non-finite entries")
    try:
        u, s, _ = np.linalg.svd(data, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return u, s


def noise_subspace(Y, k: int) -> np.ndarray:
    """Left singular vectors ``k+1..N_b`` (descending singular values)."""
    data = _matrix(Y)
    nb, p = data.shape
    _check_k(k, nb, p)
    u, _ = _svd(data, full=True)
    return u[:, k:]


def subspace_basis(Y: SmoothedMatrix, k: int) -> tuple[np.ndarray, bool]:
    """The smaller of the signal and noise bases of ``Y``.

    Returns ``(basis, is_signal)``.
    """
    data = _matrix(Y)
    nb, p = data.shape
    _check_k(k, nb, p)
    if k <= nb - k:
        u, _ = _svd(data, full=False)
        return u[:, :k], True
    u, _ = _svd(data, full=True)
    return u[:, k:], False


def spectrum_from_basis(
    basis: np.ndarray, is_signal: bool, sub: ArrayGeometry, grid_size: int
) -> PseudoSpectrum:
    if grid_size < 2:
        raise InvalidSizeError(f"grid_size must be >= 2, got {grid_size}")
    power = kernels.subspace_power(basis, sub.as_array(), grid_size)
    denom = sub.size - power if is_signal else power
    values = np.full(grid_size, SPECTRUM_CAP)
    ok = denom > 1.0 / SPECTRUM_CAP
    values[ok] = 1.0 / denom[ok]
    return PseudoSpectrum(angle_grid(grid_size), values)


def music_spectrum(Y: SmoothedMatrix, k: int, grid_size: int) -> PseudoSpectrum:
    """``1 / ||U_n^H a(theta)||^2`` over a uniform degree grid.

    When the signal subspace is the smaller one, the denominator is
    evaluated as ``N_b - ||U_s^H a||^2`` (``a`` has unit-modulus entries);
    the two forms agree to rounding. Values are capped at
    :data:`SPECTRUM_CAP`.
    """
    if grid_size < 2:
        raise InvalidSizeError(f"grid_size must be >= 2, got {grid_size}")
    basis, is_signal = subspace_basis(Y, k)
    return spectrum_from_basis(basis, is_signal, Y.sub_array, grid_size)


def pick_peaks(s: PseudoSpectrum, k: int) -> list[float]:
    """Angles of the ``k`` largest local maxima, ascending.

    Endpoints count as local maxima when they beat their single neighbour.
    Plateaus yield their leftmost point. If there are fewer than ``k`` local
    maxima, the largest remaining grid points not adjacent to a chosen one
    fill the gap.
    """
    v = np.asarray(s.values)
    g = v.shape[0]
    if k < 1 or k > g:
        raise InvalidSizeError(f"cannot pick {k} peaks from a {g}-point grid")
    if g == 1:
        return [float(s.grid[0])]
    left = np.empty(g, dtype=bool)
    right = np.empty(g, dtype=bool)
    left[0] = True
    left[1:] = v[1:] > v[:-1]
    right[-1] = True
    right[:-1] = v[:-1] >= v[1:]
    maxima = np.flatnonzero(left & right)
    # stable sort on -value keeps the lower angle first among equal peaks
    order = maxima[np.argsort(-v[maxima], kind="stable")]
    chosen = list(order[:k])
    if len(chosen) < k:
        taken = np.zeros(g, dtype=bool)
        for i in chosen:
            taken[max(i - 1, 0):i + 2] = True
        for i in np.argsort(-v, kind="stable"):
            if len(chosen) == k:
                break
            if not taken[i]:
                chosen.append(i)
                taken[max(i - 1, 0):i + 2] = True
        for i in np.argsort(-v, kind="stable"):
            # only reached on tiny grids where non-adjacency cannot be met
            if len(chosen) == k:
                break
            if i not in chosen:
                chosen.append(i)
    return sorted(float(s.grid[i]) for i in chosen)


def check_identifiability(sub: ArrayGeometry, window_length: int, k: int) -> bool:
    ok = longest_ula_segment(sub) >= k + 1 and window_length >= k
    if not ok:
        warnings.warn(
            f"K={k} exceeds the identifiability guarantee of this scheme "
            f"(longest ULA segment {longest_ula_segment(sub)}, P={window_length})",
            IdentifiabilityWarning,
            stacklevel=3,
        )
    return ok


def build_matrix(snap: Snapshot, scheme: SmoothingScheme) -> SmoothedMatrix:
    return smooth_combined(snap, scheme.sub_array, scheme.windows, scheme.weights)


def estimate_doas(
    snap: Snapshot,
    scheme: SmoothingScheme,
    k: int,
    grid_size: int = 20000,
    return_spectrum: bool = False,
):
    """Smooth, combine, scan and pick ``k`` DOAs (degrees, ascending)."""
    check_identifiability(scheme.sub_array, scheme.window_length, k)
    ybar = build_matrix(snap, scheme)
    spec = music_spectrum(ybar, k, grid_size)
    est = pick_peaks(spec, k)
    return (est, spec) if return_spectrum else est
