"""Monte Carlo and timing harness.

All randomness is derived from ``master_seed``: trial ``t`` uses
``SeedSequence([master_seed, t])`` for its noise, independently of the
scheme and noise level. Schemes sharing a full-array size therefore see the
same snapshot in every trial (paired comparison), and noise levels share
the same underlying draw scaled by sigma.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .beamforming import optimal_weights, region_matrix
from .errors import InvalidSizeError, SchemeError
from .geometry import (
    ArrayGeometry,
    make_nested,
    make_shift_windows,
    make_ula,
    validate_embedding,
)
from .model import SourceScene, Snapshot, snr_db, synthesize_snapshot, trial_seed
from .subspace import (
    PseudoSpectrum,
    SmoothingScheme,
    build_matrix,
    check_identifiability,
    estimate_doas,
    music_spectrum,
    pick_peaks,
    spectrum_from_basis,
    subspace_basis,
)

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240101
DEFAULT_REGION = (10.0, 40.0)
FAILURE_DEG = 10.0


@dataclass(frozen=True)
class SchemeConfig:
    """One smoothing scheme over an ``n_sensors``-element ULA.

    Uses the first ``window_count`` of the available windows of length
    ``window_length``. ``region`` (degrees) selects optimal shift-domain
    weights; it is required when ``window_count > 1``.
    """

    name: str
    sub_array: ArrayGeometry
    window_length: int
    window_count: int
    region: tuple[float, float] | None
    n_sensors: int

    def __post_init__(self):
        if self.n_sensors < 1:
            raise InvalidSizeError(f"n_sensors must be positive, got {self.n_sensors}")
        if self.window_length < 1 or self.window_count < 1:
            raise SchemeError(f"{self.name}: P and L must be positive")
        avail = self.total_shifts
        if avail < 1:
            raise SchemeError(
                f"{self.name}: sub-array aperture {self.sub_array.aperture} does "
                f"not fit in {self.n_sensors} sensors"
            )
        if self.window_length > avail:
            raise SchemeError(
                f"{self.name}: window length P={self.window_length} exceeds the "
                f"{avail} available shifts (N - aperture)"
            )
        if self.window_length + self.window_count - 1 > avail:
            raise SchemeError(
                f"{self.name}: P + L - 1 = {self.window_length + self.window_count - 1} "
                f"exceeds the {avail} available shifts (N - aperture)"
            )
        if self.window_count > 1 and self.region is None:
            raise SchemeError(f"{self.name}: L > 1 needs a beamforming region")

    @property
    def total_shifts(self) -> int:
        return self.n_sensors - self.sub_array.aperture

    @property
    def windows(self):
        return make_shift_windows(self.total_shifts, self.window_length)[: self.window_count]

    @property
    def dims(self) -> tuple[int, int]:
        return self.sub_array.size, self.window_length

    @cached_property
    def weights(self) -> np.ndarray | None:
        if self.region is None:
            return None
        return optimal_weights(region_matrix(self.window_count, *self.region)).w

    @cached_property
    def scheme(self) -> SmoothingScheme:
        full = make_ula(self.n_sensors)
        windows = tuple(self.windows)
        if not validate_embedding(full, self.sub_array, windows):
            raise SchemeError(f"{self.name}: shifted sub-arrays leave the full array")
        w = self.weights if self.window_count > 1 else None
        return SmoothingScheme(self.sub_array, windows, w)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "sub_array": self.sub_array.to_json(),
            "window_length": self.window_length,
            "window_count": self.window_count,
            "region_deg": list(self.region) if self.region else None,
            "n_sensors": self.n_sensors,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SchemeConfig":
        region = obj.get("region_deg")
        return cls(
            obj["name"],
            ArrayGeometry.from_positions(obj["sub_array"]),
            int(obj["window_length"]),
            int(obj.get("window_count", 1)),
            tuple(region) if region is not None else None,
            int(obj["n_sensors"]),
        )


def first_simulation_schemes(region=DEFAULT_REGION) -> dict[str, SchemeConfig]:
    """The four N = 89 schemes: S3 with/without weights, ULA1, ULA2."""
    n = 89
    return {
        "i": SchemeConfig("S3-BF", make_nested(8, 8), 8, 11, tuple(region), n),
        "ii": SchemeConfig("S3", make_nested(9, 8), 9, 1, None, n),
        "iii": SchemeConfig("ULA1", make_ula(81), 9, 1, None, n),
        "iv": SchemeConfig("ULA2", make_ula(16), 74, 1, None, n),
    }


def second_simulation_schemes(p: int, region=DEFAULT_REGION) -> dict[str, SchemeConfig]:
    """Schemes of the running-time study, ``N = P^2 + 2P + 9``."""
    if p < 2:
        raise InvalidSizeError(f"P must be >= 2, got {p}")
    n = p * p + 2 * p + 9
    nested = make_nested(p, p)
    return {
        "i": SchemeConfig("S3-BF", nested, p, 11, tuple(region), n),
        "ii": SchemeConfig("S3", nested, p + 10, 1, None, n),
        "iii": SchemeConfig("ULA1", make_ula(p * p + p), p + 10, 1, None, n),
        "iv": SchemeConfig("ULA2", make_ula(2 * p), p * p + 10, 1, None, n),
    }


class PaperConfigs(NamedTuple):
    first: dict[str, SchemeConfig]
    second: Callable[[int], dict[str, SchemeConfig]]


def paper_configs() -> PaperConfigs:
    return PaperConfigs(first_simulation_schemes(), second_simulation_schemes)


def expected_dims(p: int) -> dict[str, tuple[int, int]]:
    """Smoothed-matrix sizes of the running-time study."""
    return {
        "i": (2 * p, p),
        "ii": (2 * p, p + 10),
        "iii": (p * p + p, p + 10),
        "iv": (2 * p, p * p + 10),
    }


# --- statistics ----------------------------------------------------------------

def rmse(estimates: Sequence[Sequence[float]], truth: Sequence[float]) -> float:
    """Per-source RMSE in degrees; estimates and truth paired after sorting."""
    t = np.sort(np.asarray(truth, dtype=float))
    if len(estimates) == 0:
        raise InvalidSizeError("no estimates")
    sq = 0.0
    for est in estimates:
        e = np.sort(np.asarray(est, dtype=float))
        if e.shape != t.shape:
            raise InvalidSizeError(f"estimate has {e.shape[0]} angles, truth has {t.shape[0]}")
        sq += float(np.sum((e - t) ** 2))
    return float(np.sqrt(sq / (len(estimates) * t.shape[0])))


def resolved(estimate: Sequence[float], truth: Sequence[float], tol: float = 1.0) -> bool:
    e = np.sort(np.asarray(estimate, dtype=float))
    t = np.sort(np.asarray(truth, dtype=float))
    return e.shape == t.shape and bool(np.all(np.abs(e - t) <= tol))


# --- records --------------------------------------------------------------------

@dataclass
class TrialRecord:
    scheme: str
    trial: int
    seed: tuple[int, int]
    sigma: float
    estimates: list[float]
    sq_error: float
    elapsed: float = 0.0
    failed: bool = False


@dataclass
class RmseRow:
    scheme: str
    snr_db: float
    sigma: float
    rmse_deg: float
    failures: int


@dataclass
class SweepResult:
    rows: list[RmseRow]
    records: list[TrialRecord] = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def _timed_estimate(snap: Snapshot, scheme: SmoothingScheme, k: int, grid_size: int):
    """Same result as :func:`estimate_doas`; also returns build + SVD seconds."""
    check_identifiability(scheme.sub_array, scheme.window_length, k)
    t0 = time.perf_counter()
    ybar = build_matrix(snap, scheme)
    basis, is_signal = subspace_basis(ybar, k)
    elapsed = time.perf_counter() - t0
    spec = spectrum_from_basis(basis, is_signal, scheme.sub_array, grid_size)
    return pick_peaks(spec, k), elapsed


class _SnapshotCache:
    """Snapshots for one (sigma, trial), shared by schemes of equal N."""

    def __init__(self, scene, sigma, master_seed, trial):
        self.scene, self.sigma = scene, sigma
        self.seed = trial_seed(master_seed, trial)
        self._by_n: dict[int, Snapshot] = {}

    def get(self, n: int) -> Snapshot:
        if n not in self._by_n:
            self._by_n[n] = synthesize_snapshot(make_ula(n), self.scene, self.sigma, self.seed)
        return self._by_n[n]


def run_rmse_sweep(
    schemes: dict[str, SchemeConfig] | Sequence[SchemeConfig],
    scene: SourceScene,
    sigmas: Iterable[float],
    trials: int,
    master_seed: int = DEFAULT_SEED,
    grid_size: int = 20000,
    keep_snapshots: bool = False,
) -> SweepResult:
    """RMSE per (scheme, sigma) over ``trials`` paired trials."""
    if trials < 1:
        raise InvalidSizeError("trials must be >= 1")
    cfgs = list(schemes.values()) if isinstance(schemes, dict) else list(schemes)
    truth = np.sort(np.asarray(scene.angles))
    result = SweepResult([])
    for sigma in sigmas:
        sigma = float(sigma)
        snr = float(snr_db(scene, sigma)) if sigma > 0 else float("inf")
        per_scheme: dict[str, list[TrialRecord]] = {c.name: [] for c in cfgs}
        for t in range(trials):
            cache = _SnapshotCache(scene, sigma, master_seed, t)
            for cfg in cfgs:
                snap = cache.get(cfg.n_sensors)
                est, elapsed = _timed_estimate(snap, cfg.scheme, scene.k, grid_size)
                err = np.asarray(est) - truth
                rec = TrialRecord(
                    cfg.name, t, (int(master_seed), t), sigma, est,
                    float(np.sum(err ** 2)), elapsed,
                    failed=bool(np.max(np.abs(err)) > FAILURE_DEG),
                )
                per_scheme[cfg.name].append(rec)
                if keep_snapshots:
                    result.snapshots[(cfg.name, sigma, t)] = snap
        for cfg in cfgs:
            recs = per_scheme[cfg.name]
            value = rmse([r.estimates for r in recs], truth)
            fails = sum(r.failed for r in recs)
            if fails:
                log.info("%s at %.1f dB: %d/%d trials off by > %g deg",
                         cfg.name, snr, fails, trials, FAILURE_DEG)
            result.rows.append(RmseRow(cfg.name, snr, sigma, value, fails))
            result.records.extend(recs)
    return result


@dataclass
class TimingRow:
    scheme: str
    p: int
    n: int
    rows: int
    cols: int
    mean_seconds: float


def time_build_svd(snap: Snapshot, scheme: SmoothingScheme) -> float:
    """Wall-clock seconds for assembling the smoothed matrix and its SVD.

    The SVD is the one needed for a complete noise subspace: all ``N_b``
    left singular vectors, so full matrices when the matrix is tall.
    """
    t0 = time.perf_counter()
    y = build_matrix(snap, scheme)
    nb, p = y.data.shape
    np.linalg.svd(y.data, full_matrices=nb > p)
    return time.perf_counter() - t0


def run_timing(
    p_list: Iterable[int],
    trials: int,
    master_seed: int = DEFAULT_SEED,
    template: Callable[[int], dict[str, SchemeConfig]] = second_simulation_schemes,
    scene: SourceScene | None = None,
    snr: float = 20.0,
) -> list[TimingRow]:
    """Mean build + SVD time per (P, scheme), one untimed warm-up each."""
    from .model import reference_scene, sigma_for_snr

    scene = scene or reference_scene()
    sigma = sigma_for_snr(scene, snr)
    rows = []
    for p in p_list:
        cfgs = template(p)
        snaps = [
            synthesize_snapshot(make_ula(next(iter(cfgs.values())).n_sensors), scene,
                                sigma, trial_seed(master_seed, t))
            for t in range(trials)
        ]
        for cfg in cfgs.values():
            scheme = cfg.scheme
            time_build_svd(snaps[0], scheme)
            total = 0.0
            for snap in snaps:
                total += time_build_svd(snap, scheme)
            nb, pc = cfg.dims
            rows.append(TimingRow(cfg.name, p, cfg.n_sensors, nb, pc, total / trials))
    return rows


@dataclass
class SpectrumStudy:
    spectra: dict[str, PseudoSpectrum]
    resolve_fraction: dict[str, float] | None
    snr_db: float


def run_spectrum_study(
    schemes: dict[str, SchemeConfig] | Sequence[SchemeConfig],
    scene: SourceScene,
    sigma: float,
    trials: int,
    master_seed: int = DEFAULT_SEED,
    grid_size: int = 20000,
    tol_deg: float = 1.0,
) -> SpectrumStudy:
    """One representative spectrum per scheme (trial-0 seed) and the fraction
    of ``trials`` in which every source is matched within ``tol_deg``."""
    cfgs = list(schemes.values()) if isinstance(schemes, dict) else list(schemes)
    snr = float(snr_db(scene, sigma)) if sigma > 0 else float("inf")
    cache = _SnapshotCache(scene, sigma, master_seed, 0)
    spectra = {}
    for cfg in cfgs:
        ybar = build_matrix(cache.get(cfg.n_sensors), cfg.scheme)
        spectra[cfg.name] = music_spectrum(ybar, scene.k, grid_size)
    if trials <= 0:
        return SpectrumStudy(spectra, None, snr)
    hits = {c.name: 0 for c in cfgs}
    for t in range(trials):
        cache = _SnapshotCache(scene, sigma, master_seed, t)
        for cfg in cfgs:
            if t == 0:
                est = pick_peaks(spectra[cfg.name], scene.k)
            else:
                est = estimate_doas(cache.get(cfg.n_sensors), cfg.scheme, scene.k, grid_size)
            hits[cfg.name] += resolved(est, scene.angles, tol_deg)
    return SpectrumStudy(spectra, {k: v / trials for k, v in hits.items()}, snr)


# --- CSV output -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_rmse_csv(path: Path, rows: Sequence[RmseRow]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "snr_db", "rmse_deg"])
        for r in rows:
            w.writerow([r.scheme, _fmt(r.snr_db), _fmt(r.rmse_deg)])


def write_trials_csv(path: Path, records: Sequence[TrialRecord]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "sigma", "trial", "master_seed", "estimates_deg", "sq_error", "failed"])
        for r in records:
            w.writerow([r.scheme, _fmt(r.sigma), r.trial, r.seed[0],
                        " ".join(_fmt(e) for e in r.estimates), _fmt(r.sq_error), int(r.failed)])


def write_timing_csv(path: Path, rows: Sequence[TimingRow]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "P", "N", "rows", "cols", "mean_seconds"])
        for r in rows:
            w.writerow([r.scheme, r.p, r.n, r.rows, r.cols, _fmt(r.mean_seconds)])


def write_spectrum_csv(path: Path, spectra: dict[str, PseudoSpectrum]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "theta_deg", "value_db"])
        for name, s in spectra.items():
            for theta, v in zip(s.grid, s.to_db()):
                w.writerow([name, _fmt(theta), _fmt(v)])


def write_resolution_csv(path: Path, study: SpectrumStudy) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "snr_db", "resolve_fraction"])
        for name, frac in (study.resolve_fraction or {}).items():
            w.writerow([name, _fmt(study.snr_db), _fmt(frac)])


def write_snapshot_csv(path: Path, y: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["re", "im"])
        for z in y:
            w.writerow([_fmt(z.real), _fmt(z.imag)])


def read_snapshot_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["re", "im"]:
            raise ValueError(f"{path}: expected header 're,im', got {header}")
        vals = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            vals.append(complex(float(row[0]), float(row[1])))
    return np.asarray(vals, dtype=np.complex128)
