import numpy as np
import pytest

from fdmi.flow import textured_image

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE = {}


def record(number, title, passed, detail):
    ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{status}] {title}: {detail}")


def _gray(img):
    from skimage import color

    img = np.asarray(img, dtype=np.float64) / 255.0
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    return img


@pytest.fixture(scope="session")
def natural_crops():
    """Twelve distinct 512x512 grayscale crops of natural images, in [0, 1]."""
    data = pytest.importorskip("skimage.data")
    retina = _gray(data.retina())
    hubble = _gray(data.hubble_deep_field())
    crops = [
        _gray(data.camera()),
        _gray(data.astronaut()),
        _gray(data.brick()),
        _gray(data.grass()),
        _gray(data.gravel()),
        _gray(data.moon()),
        _gray(data.immunohistochemistry()),
        retina[300:812, 300:812],
        retina[700:1212, 500:1012],
        hubble[0:512, 0:512],
        hubble[300:812, 400:912],
        retina[100:612, 800:1312],
    ]
    assert all(c.shape == (512, 512) for c in crops)
    return np.stack(crops)


def band_limited(frames, radius):
    """Prefilter frames and lift any ringing below zero (a DC shift keeps them band-limited)."""
    from fdmi.fourier import prefilter

    out = prefilter(np.asarray(frames, dtype=np.float64), radius)
    lows = out.min(axis=(-2, -1), keepdims=True)
    return out - np.minimum(lows, 0.0)


@pytest.fixture
def textures():
    def make(n, size=128, sigma=3.0):
        return np.stack([textured_image(size, size, seed=i, sigma=sigma) for i in range(n)])

    return make
