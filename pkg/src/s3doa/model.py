"""Array manifold and single-snapshot measurement synthesis.

Noise follows the circular complex normal convention: ``CN(0, sigma^2)``
has independent real and imaginary parts, each with variance ``sigma^2/2``.

Random streams: every draw comes from ``numpy.random.default_rng(seed)``.
Monte Carlo code derives per-trial seeds as ``trial_seed(master, trial)``,
i.e. ``SeedSequence([master, trial])``, so results do not depend on the
order trials are run in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AngleDomainError, InvalidSizeError
from .geometry import ArrayGeometry


@dataclass(frozen=True)
class SourceScene:
    """K far-field sources with deterministic complex amplitudes."""

    angles: tuple[float, ...]
    amplitudes: tuple[complex, ...]

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        amps = tuple(complex(x) for x in self.amplitudes)
        if len(angles) < 1:
            raise InvalidSizeError("scene needs at least one source")
        if len(angles) != len(amps):
            raise InvalidSizeError(
                f"{len(angles)} angles but {len(amps)} amplitudes"
            )
        if len(set(angles)) != len(angles):
            raise InvalidSizeError("source angles must be distinct")
        _check_angles(angles)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def k(self) -> int:
        return len(self.angles)

    @classmethod
    def from_json(cls, obj: dict) -> "SourceScene":
        amps = [complex(re, im) for re, im in obj["amplitudes"]]
        return cls(tuple(obj["angles_deg"]), tuple(amps))

    def to_json(self) -> dict:
        return {
            "angles_deg": list(self.angles),
            "amplitudes": [[x.real, x.imag] for x in self.amplitudes],
        }


@dataclass(frozen=True)
class Snapshot:
    y: np.ndarray
    geometry: ArrayGeometry
    noise_sigma: float = 0.0
    seed: object = field(default=None, compare=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.complex128)
        if y.ndim != 1 or y.shape[0] != self.geometry.size:
            raise InvalidSizeError(
                f"snapshot has {y.shape} entries, geometry has {self.geometry.size} sensors"
            )
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


def _check_angles(angles_deg) -> None:
    a = np.asarray(angles_deg, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < -90.0) or np.any(a >= 90.0):
        raise AngleDomainError(f"angles must lie in [-90, 90) degrees, got {angles_deg}")


def steering_phase(angles_deg) -> np.ndarray:
    """Reduced angle ``u = pi sin(theta)`` for angles in degrees."""
    return np.pi * np.sin(np.deg2rad(np.asarray(angles_deg, dtype=float)))


def manifold_matrix(g: ArrayGeometry | Sequence[int], angles_deg) -> np.ndarray:
    """M x K matrix with entries ``exp(1j * pi * d_m * sin(theta_k))``."""
    angles = np.atleast_1d(np.asarray(angles_deg, dtype=float))
    _check_angles(angles)
    d = np.asarray(g.positions if isinstance(g, ArrayGeometry) else g, dtype=float)
    return np.exp(1j * np.outer(d, steering_phase(angles)))


def trial_seed(master_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(trial)])


def complex_noise(n: int, sigma: float, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z * (sigma / np.sqrt(2.0))


def synthesize_snapshot(
    g: ArrayGeometry, scene: SourceScene, sigma: float, seed=0
) -> Snapshot:
    """``y = A(theta) x + n`` for one snapshot.

    The noise draw consumes the generator even when ``sigma == 0`` so that
    equal seeds give equal noise shapes at every noise level.
    """
    if sigma < 0:
        raise InvalidSizeError(f"noise sigma must be non-negative, got {sigma}")
    clean = manifold_matrix(g, scene.angles) @ np.asarray(scene.amplitudes)
    y = clean + complex_noise(g.size, sigma, seed)
    return Snapshot(y, g, float(sigma), seed)


def snr_db(scene: SourceScene, sigma: float) -> float:
    """``20 log10(min_k |x_k| / sigma)``."""
    if sigma <= 0:
        raise InvalidSizeError("SNR is undefined for sigma <= 0")
    return 20.0 * np.log10(min(abs(x) for x in scene.amplitudes) / sigma)


def sigma_for_snr(scene: SourceScene, snr: float) -> float:
    """Inverse of :func:`snr_db`."""
    return min(abs(x) for x in scene.amplitudes) * 10.0 ** (-snr / 20.0)


def reference_scene(angles_deg=(20.0, 25.0, 30.0)) -> SourceScene:
    """Equal-amplitude in-phase sources with ``x_k = (1 + 1j)/sqrt(2)``."""
    amp = (1 + 1j) / np.sqrt(2.0)
    return SourceScene(tuple(angles_deg), tuple(amp for _ in angles_deg))
