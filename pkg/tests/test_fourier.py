import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fdmi.exceptions import ValidationError
from fdmi.fourier import (
    MAX_RADIUS,
    band_profile,
    fold,
    forward_spectrum,
    frequency_grid,
    inverse_spectrum,
    log_magnitude,
    lowpass_kernel,
    prefilter,
    torus_distance,
)


def brute_force_dft(img):
    """Direct O(N^2) DFT used as an oracle for the FFT path."""
    h, w = img.shape
    fy = np.exp(-2j * np.pi * np.outer(np.arange(h), np.arange(h)) / h)
    fx = np.exp(-2j * np.pi * np.outer(np.arange(w), np.arange(w)) / w)
    return fy @ img @ fx.T


images = arrays(
    np.float64,
    st.tuples(st.integers(1, 12), st.integers(1, 12)),
    elements=st.floats(-10, 10, allow_nan=False, width=64),
)


@given(images)
def test_round_trip(img):
    back = inverse_spectrum(forward_spectrum(img))
    assert np.sqrt(np.mean((back - img) ** 2)) < 1e-9


@given(images)
def test_parseval_and_dc(img):
    spec = forward_spectrum(img)
    h, w = img.shape
    energy = np.sum(img**2)
    assert np.isclose(energy, np.sum(np.abs(spec) ** 2) / (w * h), rtol=1e-9, atol=1e-9)
    dc = spec[h // 2, w // 2]
    assert np.isclose(dc.real, w * h * img.mean(), rtol=1e-9, atol=1e-9)


@given(images)
def test_matches_brute_force_dft(img):
    spec = forward_spectrum(img)
    assert np.allclose(np.fft.ifftshift(spec), brute_force_dft(img), atol=1e-8)


def test_on_grid_cosine_has_three_bins():
    w, h = 32, 16
    x = np.arange(w)[None, :].repeat(h, 0)
    img = 0.5 + 0.25 * np.cos(2 * np.pi * 5 / 32 * x)
    spec = np.fft.ifftshift(forward_spectrum(img))
    nz = np.argwhere(np.abs(spec) > 1e-9)
    assert sorted(map(tuple, nz)) == [(0, 0), (0, 5), (0, 27)]
    assert np.isclose(spec[0, 0], 0.5 * w * h)
    assert np.isclose(spec[0, 5], 0.125 * w * h)


def test_frequency_grid_range_and_layout():
    u, v = frequency_grid((6, 5))
    assert u.shape == (6, 5)
    assert u.min() >= -0.5 and u.max() < 0.5
    assert v.min() == -0.5
    assert u[0, 2] == 0 and v[3, 0] == 0
    uu, _ = frequency_grid((6, 5), centered=False)
    assert uu[0, 0] == 0


@given(st.floats(-5, 5, allow_nan=False))
def test_fold_lands_in_nyquist_interval(f):
    g = fold(f)
    assert -0.5 <= g < 0.5
    assert np.isclose((f - g) % 1.0, 0, atol=1e-9) or np.isclose((f - g) % 1.0, 1, atol=1e-9)


def test_torus_distance_wraps():
    assert np.isclose(torus_distance([0.45, 0.0], [-0.45, 0.0]), 0.1)
    assert np.isclose(torus_distance([0.3, 0.4], [0.3, 0.4]), 0)


def test_band_profile_shape():
    rho = np.linspace(0, 0.3, 301)
    prof = band_profile(rho, 0.2)
    assert np.all(prof[rho <= 0.18] == 1)
    assert np.all(prof[rho >= 0.2] == 0)
    assert np.all(np.diff(prof) <= 0)


def test_lowpass_kernel_is_symmetric():
    k = lowpass_kernel((9, 8), 0.3)
    # real and even, so filtering a real image gives a real image
    flipped = np.roll(k[::-1, ::-1], (1, 1), axis=(0, 1))
    assert np.allclose(k, flipped)


def test_prefilter_removes_out_of_band_cosine():
    x = np.arange(64)[None, :].repeat(64, 0)
    low = np.cos(2 * np.pi * 4 / 64 * x)
    high = np.cos(2 * np.pi * 24 / 64 * x)
    out = prefilter(1 + low + high, 0.2)
    assert np.allclose(out, 1 + low, atol=1e-12)


def test_prefilter_identity_at_full_radius():
    rng = np.random.default_rng(0)
    img = rng.random((10, 7))
    assert np.array_equal(prefilter(img, MAX_RADIUS), img)


def test_prefilter_stack_matches_per_image():
    rng = np.random.default_rng(1)
    stack = rng.random((3, 16, 12))
    out = prefilter(stack, 0.2)
    for i in range(3):
        assert np.allclose(out[i], prefilter(stack[i], 0.2))


def test_prefilter_rejects_bad_input():
    with pytest.raises(ValidationError):
        prefilter(np.ones((4, 4)), 0)
    with pytest.raises(ValidationError):
        prefilter(np.ones(4), 0.2)


def test_log_magnitude_normalized():
    rng = np.random.default_rng(2)
    out = log_magnitude(forward_spectrum(rng.random((8, 8))))
    assert out.max() == 1 and out.min() >= 0
    assert np.all(log_magnitude(np.zeros((2, 2))) == 0)


@settings(max_examples=25)
@given(images)
def test_hermitian_symmetry(img):
    s = np.fft.ifftshift(forward_spectrum(img))
    conj = np.conj(np.roll(s[::-1, ::-1], (1, 1), axis=(0, 1)))
    assert np.allclose(s, conj, atol=1e-8)
