"""Shift-domain beamforming.

Smoothed matrices built from consecutive unit-shifted windows differ only
by a per-source phase ``exp(1j*(l-1)*u_k)`` with ``u = pi sin(theta)``.
A weighted sum ``sum_l Y_l conj(w_l)`` therefore scales source ``k`` by the
beam gain ``B(theta_k) = w^H a(theta_k)``, where
``a(theta) = [1, e^{ju}, ..., e^{j(L-1)u}]``.

Noise in different windows is uncorrelated, so the noise power of the
combination is ``||w||^2`` times that of one window, and the weights that
maximize SNR averaged over ``u in (u_l, u_h)`` are the top eigenvector of
``A = integral of a(u) a(u)^H du`` over that interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AngleDomainError, DimensionError, EmptyRegionError, NumericalError
from .smoothing import SmoothedMatrix

DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class RegionMatrix:
    """Hermitian PSD matrix ``A`` for the angular region ``(theta_l, theta_h)``."""

    a: np.ndarray
    region: tuple[float, float]

    @property
    def size(self) -> int:
        return self.a.shape[0]

    @property
    def reduced_bounds(self) -> tuple[float, float]:
        lo, hi = self.region
        return float(np.pi * np.sin(np.deg2rad(lo))), float(np.pi * np.sin(np.deg2rad(hi)))


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Unit-norm shift-domain weights.

    ``degenerate`` is set when the top eigenvalue of the region matrix is not
    simple, in which case any unit vector in its eigenspace is equally good.
    """

    w: np.ndarray
    eigenvalue: float = float("nan")
    degenerate: bool = False

    def __len__(self):
        return self.w.shape[0]


def region_matrix(L: int, theta_l: float, theta_h: float) -> RegionMatrix:
    """Closed form of ``integral_{u_l}^{u_h} a(u) a(u)^H du``.

    Entry ``(m, m')`` is ``(e^{jk u_h} - e^{jk u_l}) / (jk)`` with ``k = m - m'``,
    and ``u_h - u_l`` on the diagonal.
    """
    if L < 1:
        raise DimensionError(f"L must be positive, got {L}")
    if not (-90.0 <= theta_l <= 90.0 and -90.0 <= theta_h <= 90.0):
        raise AngleDomainError(f"region ({theta_l}, {theta_h}) outside [-90, 90]")
    if theta_l >= theta_h:
        raise EmptyRegionError(f"empty region: theta_l={theta_l} >= theta_h={theta_h}")
    u_l = np.pi * np.sin(np.deg2rad(theta_l))
    u_h = np.pi * np.sin(np.deg2rad(theta_h))
    idx = np.arange(L)
    k = (idx[:, None] - idx[None, :]).astype(float)
    off = k != 0
    a = np.full((L, L), u_h - u_l, dtype=np.complex128)
    kk = k[off]
    a[off] = (np.exp(1j * kk * u_h) - np.exp(1j * kk * u_l)) / (1j * kk)
    a.setflags(write=False)
    return RegionMatrix(a, (float(theta_l), float(theta_h)))


def canonical_phase(w: np.ndarray) -> np.ndarray:
    """Rotate ``w`` so its first largest-modulus entry is real and non-negative.

    Entries within a relative 1e-9 of the maximum modulus count as ties, so
    the choice does not flip on rounding noise.
    """
    mag = np.abs(w)
    ref = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
    if mag[ref] == 0:
        return w
    out = w * (np.conj(w[ref]) / mag[ref])
    out[ref] = mag[ref]
    return out


def optimal_weights(A: RegionMatrix) -> WeightVector:
    """Top eigenvector of ``A`` (maximizer of the Rayleigh quotient)."""
    try:
        vals, vecs = np.linalg.eigh(A.a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise NumericalError("eigensolver returned non-finite eigenvalues")
    lam = float(vals[-1])
    degenerate = len(vals) > 1 and (lam - vals[-2]) < DEGENERACY_RTOL * abs(lam)
    w = vecs[:, -1]
    w = canonical_phase(w / np.linalg.norm(w))
    return WeightVector(w, lam, bool(degenerate))


def shift_steering(L: int, theta_deg) -> np.ndarray:
    """``a(theta)`` columns, shape (L, n_angles)."""
    u = np.pi * np.sin(np.deg2rad(np.atleast_1d(np.asarray(theta_deg, dtype=float))))
    return np.exp(1j * np.outer(np.arange(L), u))


def _as_array(w) -> np.ndarray:
    return np.asarray(w.w if isinstance(w, WeightVector) else w, dtype=np.complex128)


def beam_gain(w, theta_deg):
    """``B(theta) = w^H a(theta)``. Scalar in, scalar out."""
    wv = _as_array(w)
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(theta < -90.0) or np.any(theta >= 90.0):
        raise AngleDomainError("beam gain angles must lie in [-90, 90)")
    g = wv.conj() @ shift_steering(wv.shape[0], theta)
    return complex(g[0]) if theta.ndim == 0 else g


def beampattern(w, step_deg: float = 1.0):
    """Grid over [-90, 90) and ``20 log10 |B(theta)|`` on it."""
    theta = np.arange(-90.0, 90.0, step_deg)
    gain = np.abs(beam_gain(w, theta))
    with np.errstate(divide="ignore"):
        return theta, 20.0 * np.log10(gain)


def combine(mats: Sequence[SmoothedMatrix], w) -> SmoothedMatrix:
    """``sum_l mats[l].data * conj(w_l)``.

    The matrices must come from one sub-array and consecutive unit-shifted
    windows of equal length. The result carries the first window.
    """
    wv = _as_array(w)
    if len(mats) == 0 or wv.shape != (len(mats),):
        raise DimensionError(f"{wv.shape} weights for {len(mats)} matrices")
    first = mats[0]
    for l, m in enumerate(mats):
        if m.sub_array != first.sub_array or m.data.shape != first.data.shape:
            raise DimensionError("matrices must share sub-array and shape")
        if m.window.start != first.window.start + l:
            raise DimensionError("windows must be consecutive unit shifts")
    data = np.zeros_like(first.data)
    for m, wl in zip(mats, wv):
        data += m.data * np.conj(wl)
    return SmoothedMatrix(data, first.sub_array, first.window)


def mean_region_gain(w, A: RegionMatrix) -> float:
    """``w^H A w`` (the integrated squared beam gain over the region)."""
    wv = _as_array(w)
    if wv.shape[0] != A.size:
        raise DimensionError(f"{wv.shape[0]} weights for a {A.size}x{A.size} region matrix")
    return float(np.real(wv.conj() @ A.a @ wv))
