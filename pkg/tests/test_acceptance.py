"""End-to-end acceptance checks, one test per numbered criterion.

Each test carries ``@pytest.mark.acceptance(number, title)``; conftest prints
a PASS/FAIL line per criterion at the end of the run.
"""
import time

import numpy as np
import pytest

from s3doa.beamforming import beam_gain, combine, optimal_weights, region_matrix
from s3doa.experiments import (
    DEFAULT_SEED,
    expected_dims,
    paper_configs,
    run_rmse_sweep,
    run_spectrum_study,
    run_timing,
    write_resolution_csv,
    write_rmse_csv,
    write_spectrum_csv,
    write_trials_csv,
)
from s3doa.geometry import make_nested, make_shift_windows, make_ula
from s3doa.model import (
    Snapshot,
    SourceScene,
    complex_noise,
    manifold_matrix,
    reference_scene,
    sigma_for_snr,
    synthesize_snapshot,
    trial_seed,
)
from s3doa.smoothing import smooth_stack
from test_beamforming import quadrature_region_matrix

GRID = 20000
STEP = 180.0 / GRID
CLOSE = (20.0, 22.0, 24.0)


# --- shared runs (criterion 10 reruns these and compares bytes) ----------------

def noiseless_run(out):
    t0 = time.perf_counter()
    res = run_rmse_sweep(paper_configs().first, reference_scene(), [0.0], trials=1,
                         master_seed=DEFAULT_SEED, grid_size=GRID)
    res.elapsed = time.perf_counter() - t0
    write_trials_csv(out / "noiseless_trials.csv", res.records)
    return res


def rmse_run(out):
    scene = reference_scene()
    sigmas = [sigma_for_snr(scene, s) for s in (20.0, -5.0, -10.0)]
    res = run_rmse_sweep(paper_configs().first, scene, sigmas, trials=200,
                         master_seed=DEFAULT_SEED, grid_size=GRID)
    write_rmse_csv(out / "rmse_sweep.csv", res.rows)
    write_trials_csv(out / "rmse_trials.csv", res.records)
    return {(r.scheme, round(r.snr_db, 6)): r.rmse_deg for r in res.rows}


def resolution_run(out):
    scene = reference_scene(CLOSE)
    studies = {}
    for snr in (0.0, 14.0):
        study = run_spectrum_study(paper_configs().first, scene, sigma_for_snr(scene, snr),
                                   trials=50, master_seed=DEFAULT_SEED, grid_size=GRID)
        write_spectrum_csv(out / f"spectrum_{snr:g}.csv", study.spectra)
        write_resolution_csv(out / f"resolution_{snr:g}.csv", study)
        studies[snr] = study.resolve_fraction
    return studies


@pytest.fixture(scope="module")
def first_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("first_run")


@pytest.fixture(scope="module")
def noiseless(first_dir):
    return noiseless_run(first_dir)


@pytest.fixture(scope="module")
def rmse_table(first_dir):
    return rmse_run(first_dir)


@pytest.fixture(scope="module")
def resolution(first_dir):
    return resolution_run(first_dir)


# --- criteria --------------------------------------------------------------------

@pytest.mark.acceptance(1, "closed-form region matrix vs trapezoid quadrature")
def test_criterion_1_quadrature():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        L = int(rng.integers(1, 17))
        lo, hi = np.sort(rng.uniform(-90, 90, 2))
        err = np.abs(region_matrix(L, lo, hi).a - quadrature_region_matrix(L, lo, hi)).max()
        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    print(f"max entry error {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-6
    assert elapsed < 5


@pytest.mark.acceptance(2, "Rayleigh optimality of the region weights")
def test_criterion_2_rayleigh():
    t0 = time.perf_counter()
    A = region_matrix(11, 10, 40).a
    wo = optimal_weights(region_matrix(11, 10, 40)).w
    best = np.real(wo.conj() @ A @ wo)
    rng = np.random.default_rng(202)
    w = rng.standard_normal((1000, 11)) + 1j * rng.standard_normal((1000, 11))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    vals = np.real(np.einsum("ti,ij,tj->t", w.conj(), A, w))
    elapsed = time.perf_counter() - t0
    print(f"min margin {np.min(best - vals):.3e}, {elapsed:.3f}s")
    assert np.all(best - vals >= -1e-9)
    assert elapsed < 1


@pytest.mark.acceptance(3, "noiseless exact recovery, schemes (i)-(iv)")
def test_criterion_3_noiseless(noiseless):
    errs = {r.scheme: np.abs(np.array(r.estimates) - [20, 25, 30]).max() for r in noiseless.records}
    print({k: f"{v:.5f}" for k, v in errs.items()}, f"{noiseless.elapsed:.1f}s")
    assert set(errs) == {"S3-BF", "S3", "ULA1", "ULA2"}
    assert all(e <= STEP for e in errs.values())
    assert noiseless.elapsed < 30


@pytest.mark.acceptance(4, "combined-matrix factorization on random scenes")
def test_criterion_4_factorization():
    rng = np.random.default_rng(404)
    sub = make_nested(8, 8)
    windows = make_shift_windows(18, 8)
    wo = optimal_weights(region_matrix(11, 10, 40)).w
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 5))
        angles = tuple(rng.uniform(-85, 85, k))
        amps = tuple(rng.standard_normal(k) + 1j * rng.standard_normal(k))
        scene = SourceScene(angles, amps)
        w = wo if rng.random() < 0.5 else rng.standard_normal(11) + 1j * rng.standard_normal(11)
        snap = synthesize_snapshot(make_ula(89), scene, 0.0)
        ybar = combine(smooth_stack(snap, sub, windows), w).data
        gain = np.diag(beam_gain(w, np.asarray(angles)))
        rhs = (manifold_matrix(sub, angles) @ np.diag(amps) @ gain
               @ manifold_matrix(list(windows[0].shifts), angles).T)
        worst = max(worst, np.linalg.norm(ybar - rhs) / np.linalg.norm(rhs))
    elapsed = time.perf_counter() - t0
    print(f"max relative error {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-12
    assert elapsed < 10


@pytest.mark.acceptance(5, "noise orthogonality across shift windows")
def test_criterion_5_noise_whiteness():
    sigma, trials = 1.0, 10_000
    sub = make_nested(8, 8)
    windows = make_shift_windows(18, 8)
    ula = make_ula(89)
    ns = sub.size * 8
    t0 = time.perf_counter()
    gram = np.zeros((11, 11), dtype=complex)
    for t in range(trials):
        noise = Snapshot(complex_noise(89, sigma, trial_seed(DEFAULT_SEED, t)), ula)
        v = np.stack([m.data.ravel(order="F") for m in smooth_stack(noise, sub, windows)])
        gram += v.conj() @ v.T
    gram /= trials
    elapsed = time.perf_counter() - t0
    off = np.abs(gram - np.diag(np.diag(gram))).max()
    diag_dev = np.abs(np.diag(gram).real / (ns * sigma**2) - 1).max()
    print(f"off-diag max {off:.2f} (limit {0.05 * ns:.1f}), diag dev {diag_dev:.4f}, {elapsed:.1f}s")
    assert off < 0.05 * ns * sigma**2
    assert diag_dev < 0.05
    assert elapsed < 60


@pytest.mark.acceptance(6, "RMSE ordering vs SNR (200 paired trials)")
def test_criterion_6_rmse(rmse_table):
    for key, val in sorted(rmse_table.items()):
        print(f"{key[0]:>6} {key[1]:>6.1f} dB  rmse {val:.4f}")
    for snr in (-10.0, -5.0):
        i = rmse_table[("S3-BF", snr)]
        assert i < rmse_table[("ULA1", snr)]
        assert i < rmse_table[("ULA2", snr)]
    assert all(rmse_table[(name, 20.0)] < 0.5 for name in ("S3-BF", "S3", "ULA1", "ULA2"))


@pytest.mark.acceptance(7, "close-source resolution (50 trials)")
def test_criterion_7_resolution(resolution):
    print({snr: fr for snr, fr in resolution.items()})
    assert resolution[0.0]["S3-BF"] > resolution[0.0]["ULA2"]
    assert resolution[14.0]["ULA2"] < 0.5


@pytest.mark.acceptance(8, "build + SVD cost scaling with P")
def test_criterion_8_timing():
    for p in range(5, 16):
        for name, cfg in paper_configs().second(p).items():
            assert cfg.dims == expected_dims(p)[name]
    rows = run_timing([5, 15], trials=200)
    key = {"S3-BF": "i", "S3": "ii", "ULA1": "iii", "ULA2": "iv"}
    t = {(r.p, key[r.scheme]): r.mean_seconds for r in rows}
    for (p, name), sec in sorted(t.items()):
        print(f"P={p:>2} {name:>3} {sec * 1e6:9.1f} us")
    fast = max(t[(15, "i")], t[(15, "ii")])
    slow = min(t[(15, "iii")], t[(15, "iv")])
    print(f"P=15 slow/fast {slow / fast:.2f}")
    assert 3 * fast <= slow
    assert t[(15, "iii")] / t[(15, "i")] > t[(5, "iii")] / t[(5, "i")]


@pytest.mark.acceptance(9, "beampattern concentrates gain in the region")
def test_criterion_9_beampattern():
    t0 = time.perf_counter()
    wo = optimal_weights(region_matrix(11, 10, 40)).w
    theta = np.arange(-90.0, 90.0, 1.0)
    power = np.abs(beam_gain(wo, theta)) ** 2
    inside = (theta > 10) & (theta < 40)
    print(f"in {power[inside].mean():.3f} out {power[~inside].mean():.3f}")
    assert power[inside].mean() > power[~inside].mean()
    assert time.perf_counter() - t0 < 1


@pytest.mark.acceptance(10, "reruns with the same seed give identical CSVs")
def test_criterion_10_determinism(first_dir, noiseless, rmse_table, resolution, tmp_path):
    noiseless_run(tmp_path)
    rmse_run(tmp_path)
    resolution_run(tmp_path)
    files = sorted(p.name for p in first_dir.iterdir())
    assert len(files) == 7
    for name in files:
        assert (first_dir / name).read_bytes() == (tmp_path / name).read_bytes(), name
