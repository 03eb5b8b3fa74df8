"""Rearranging one snapshot into spatially smoothed matrices.

Column ``p`` of the matrix for window ``{t, ..., t+P-1}`` holds the snapshot
entries at ``sub + t + p``; rows follow ascending sub-array position. The
full array must be a ULA so that position equals index into ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, EmbeddingError, UnsupportedGeometryError
from .geometry import ArrayGeometry, ShiftWindow
from .model import Snapshot


@dataclass(frozen=True, eq=False)
class SmoothedMatrix:
    data: np.ndarray
    sub_array: ArrayGeometry
    window: ShiftWindow

    def __post_init__(self):
        if self.data.shape != (self.sub_array.size, self.window.length):
            raise DimensionError(
                f"data shape {self.data.shape} does not match "
                f"{self.sub_array.size} x {self.window.length}"
            )

    @property
    def shape(self):
        return self.data.shape


def _check(snap: Snapshot, sub: ArrayGeometry, windows: Sequence[ShiftWindow]):
    if not snap.geometry.is_ula():
        raise UnsupportedGeometryError("smoothing requires the full array to be a ULA")
    # cheap bound check; the full array is a ULA so this is exact
    last = max(w.stop for w in windows)
    if sub.positions[-1] + last > snap.geometry.positions[-1]:
        raise EmbeddingError(
            f"sub-array (aperture {sub.aperture}) shifted by {last} leaves the "
            f"{snap.geometry.size}-sensor array"
        )


def smooth(snap: Snapshot, sub: ArrayGeometry, window: ShiftWindow) -> SmoothedMatrix:
    _check(snap, sub, [window])
    idx = sub.as_array()[:, None] + (window.start + np.arange(window.length))[None, :]
    return SmoothedMatrix(snap.y[idx], sub, window)


def smooth_stack(
    snap: Snapshot, sub: ArrayGeometry, windows: Sequence[ShiftWindow]
) -> list[SmoothedMatrix]:
    _check(snap, sub, windows)
    return [smooth(snap, sub, w) for w in windows]


def smooth_combined(
    snap: Snapshot,
    sub: ArrayGeometry,
    windows: Sequence[ShiftWindow],
    w: np.ndarray | None = None,
) -> SmoothedMatrix:
    """Weighted sum ``sum_l Y_l conj(w_l)`` assembled straight from ``y``.

    Same result as ``combine(smooth_stack(...), w)`` without materializing
    the L intermediate matrices. ``w=None`` requires a single window.
    """
    _check(snap, sub, windows)
    if w is None:
        if len(windows) != 1:
            raise DimensionError("weights are required for more than one window")
        wconj = np.ones(1, dtype=np.complex128)
    else:
        wconj = np.conj(np.asarray(w, dtype=np.complex128))
        if wconj.shape != (len(windows),):
            raise DimensionError(f"{wconj.shape[0]} weights for {len(windows)} windows")
    p = windows[0].length
    if any(win.length != p for win in windows):
        raise DimensionError("all windows must share the same length")
    starts = np.array([win.start for win in windows], dtype=np.int64)
    data = kernels.gather_combine(snap.y, sub.as_array(), starts, p, wconj)
    return SmoothedMatrix(data, sub, windows[0])

