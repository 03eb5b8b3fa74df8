import warnings

import numpy as np
import pytest

from s3doa.errors import InvalidSizeError, SubspaceDimensionError
from s3doa.geometry import ArrayGeometry, ShiftWindow, make_nested, make_shift_windows, make_ula
from s3doa.model import SourceScene, Snapshot, manifold_matrix, reference_scene, synthesize_snapshot
from s3doa.smoothing import SmoothedMatrix, smooth
from s3doa.subspace import (
    IdentifiabilityWarning,
    PseudoSpectrum,
    SmoothingScheme,
    angle_grid,
    estimate_doas,
    music_spectrum,
    noise_subspace,
    pick_peaks,
)

STEP = 180.0 / 20000


def config_i_scheme(weights=None):
    windows = tuple(make_shift_windows(18, 8))
    if weights is None:
        windows = windows[:1]
    return SmoothingScheme(make_nested(8, 8), windows, weights)


def test_noise_subspace_single_source():
    snap = synthesize_snapshot(make_ula(30), SourceScene((-12.0,), (1j,)), 0.0)
    sub = make_nested(3, 5)
    un = noise_subspace(smooth(snap, sub, ShiftWindow(0, 6)), 1)
    a = manifold_matrix(sub, [-12.0])[:, 0]
    assert un.shape == (sub.size, sub.size - 1)
    assert np.abs(un.conj().T @ a).max() < 1e-8 * np.linalg.norm(a)
    assert np.abs(un.conj().T @ un - np.eye(un.shape[1])).max() < 1e-10


def test_noise_subspace_config_i():
    scene = reference_scene()
    snap = synthesize_snapshot(make_ula(89), scene, 0.0)
    sub = make_nested(8, 8)
    un = noise_subspace(smooth(snap, sub, ShiftWindow(0, 8)), 3)
    a = manifold_matrix(sub, scene.angles)
    assert np.abs(un.conj().T @ a).max() < 1e-8 * np.sqrt(sub.size)


def test_noise_subspace_dimension():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 6)))
    y = SmoothedMatrix(q[:4, :].astype(complex), ArrayGeometry((0, 1, 2, 3)), ShiftWindow(0, 6))
    assert noise_subspace(y, 3).shape == (4, 1)
    with pytest.raises(SubspaceDimensionError):
        noise_subspace(y, 4)
    narrow = SmoothedMatrix(np.ones((4, 2), complex), ArrayGeometry((0, 1, 2, 3)), ShiftWindow(0, 2))
    with pytest.raises(SubspaceDimensionError):
        noise_subspace(narrow, 3)


def test_spectrum_peak_on_grid_point():
    grid = angle_grid(360)
    theta = float(grid[250])
    snap = synthesize_snapshot(make_ula(40), SourceScene((theta,), (1,)), 0.0)
    spec = music_spectrum(smooth(snap, make_nested(4, 4), ShiftWindow(0, 10)), 1, 360)
    assert spec.grid[np.argmax(spec.values)] == theta


def test_spectrum_matches_noise_subspace_form():
    snap = synthesize_snapshot(make_ula(89), reference_scene(), 1.0, seed=4)
    y = smooth(snap, make_nested(8, 8), ShiftWindow(0, 8))
    un = noise_subspace(y, 3)
    grid = angle_grid(500)
    direct = 1 / np.sum(np.abs(un.conj().T @ manifold_matrix(y.sub_array, grid)) ** 2, axis=0)
    assert np.allclose(music_spectrum(y, 3, 500).values, direct, rtol=1e-9)
    # wide matrix with a large k takes the noise-basis branch
    y2 = smooth(snap, make_ula(6), ShiftWindow(0, 30))
    un2 = noise_subspace(y2, 4)
    direct2 = 1 / np.sum(np.abs(un2.conj().T @ manifold_matrix(y2.sub_array, grid)) ** 2, axis=0)
    assert np.allclose(music_spectrum(y2, 4, 500).values, direct2, rtol=1e-9)


def test_noiseless_config_i_peaks():
    snap = synthesize_snapshot(make_ula(89), reference_scene(), 0.0)
    spec = music_spectrum(smooth(snap, make_nested(8, 8), ShiftWindow(0, 8)), 3, 20000)
    est = pick_peaks(spec, 3)
    assert np.abs(np.array(est) - [20, 25, 30]).max() <= STEP


def test_pure_noise_spectrum_finite():
    snap = synthesize_snapshot(make_ula(89), SourceScene((0.0,), (0,)), 1.0, seed=0)
    spec = music_spectrum(smooth(snap, make_nested(8, 8), ShiftWindow(0, 8)), 1, 2000)
    assert np.all(np.isfinite(spec.values)) and np.all(spec.values >= 0)
    zero = Snapshot(np.zeros(89), make_ula(89))
    spec = music_spectrum(smooth(zero, make_nested(8, 8), ShiftWindow(0, 8)), 3, 2000)
    assert np.all(np.isfinite(spec.values))


def test_pick_peaks():
    grid = np.arange(10.0)
    vals = np.array([0, 5, 0, 1, 0, 0, 3, 0, 0, 0], float)
    assert pick_peaks(PseudoSpectrum(grid, vals), 3) == [1.0, 3.0, 6.0]
    assert pick_peaks(PseudoSpectrum(grid, vals), 1) == [1.0]
    rising = PseudoSpectrum(grid, np.arange(10.0))
    assert pick_peaks(rising, 1) == [9.0]
    falling = PseudoSpectrum(grid, -np.arange(10.0))
    assert pick_peaks(falling, 1) == [0.0]
    # one local maximum, so the second pick is the best non-adjacent point
    assert pick_peaks(rising, 2) == [7.0, 9.0]
    with pytest.raises(InvalidSizeError):
        pick_peaks(rising, 11)


def test_estimate_doas_config_i():
    from s3doa.beamforming import optimal_weights, region_matrix

    snap = synthesize_snapshot(make_ula(89), reference_scene(), 0.0)
    w = optimal_weights(region_matrix(11, 10, 40)).w
    est = estimate_doas(snap, config_i_scheme(w), 3, 20000)
    assert np.abs(np.array(est) - [20, 25, 30]).max() <= STEP


def test_single_window_is_classical_smoothing():
    snap = synthesize_snapshot(make_ula(89), reference_scene(), 0.5, seed=2)
    scheme = config_i_scheme()
    est, spec = estimate_doas(snap, scheme, 3, 3000, return_spectrum=True)
    direct = music_spectrum(smooth(snap, scheme.sub_array, scheme.windows[0]), 3, 3000)
    assert np.array_equal(spec.values, direct.values)
    assert est == pick_peaks(direct, 3)


def test_identifiability_warning():
    snap = synthesize_snapshot(make_ula(89), reference_scene(), 0.0)
    scheme = SmoothingScheme(make_nested(2, 20), (ShiftWindow(0, 8),))
    with pytest.warns(IdentifiabilityWarning):
        estimate_doas(snap, scheme, 3, 500)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        estimate_doas(snap, config_i_scheme(), 3, 500)


def test_scaling_invariance():
    snap = synthesize_snapshot(make_ula(89), reference_scene(), 0.8, seed=6)
    y = smooth(snap, make_nested(8, 8), ShiftWindow(0, 8))
    scaled = SmoothedMatrix(y.data * 37.5, y.sub_array, y.window)
    a = music_spectrum(y, 3, 5000)
    b = music_spectrum(scaled, 3, 5000)
    assert pick_peaks(a, 3) == pick_peaks(b, 3)
