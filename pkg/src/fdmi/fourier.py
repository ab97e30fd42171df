"""Discrete Fourier plumbing: spectra, frequency grids and disk filters.

Normalization convention
------------------------
The forward transform is unnormalized and the inverse carries the full
``1/(W*H)`` factor (numpy's default). Consequently

* the DC bin equals ``W * H * mean(img)``,
* Parseval reads ``sum(|img|**2) == sum(|S|**2) / (W * H)``,
* an on-grid cosine ``a + b*cos(2*pi*u0*x)`` has three nonzero bins with
  weights ``a*W*H`` at DC and ``b/2*W*H`` at each of ``+-u0``.

Spectra returned by :func:`forward_spectrum` are DC-centered (``fftshift``
layout); frequency coordinates are in cycles/pixel and lie in
``[-0.5, 0.5)``. Internally the codec works in the unshifted layout.
"""

import math

import numpy as np

from .exceptions import ValidationError
from .validation import check_image, check_positive

#: Largest radial frequency present on any pixel grid (the Nyquist corner).
MAX_RADIUS = 0.5 * math.sqrt(2.0)

#: Fraction of a band radius covered by the raised-cosine edge taper.
TAPER_FRACTION = 0.1


def forward_spectrum(img):
    """DC-centered spectrum of a real image (unnormalized forward DFT)."""
    img = check_image(img)
    return np.fft.fftshift(np.fft.fft2(img))


def inverse_spectrum(spec):
    """Real image from a DC-centered spectrum; the imaginary residue is dropped."""
    spec = np.asarray(spec, dtype=np.complex128)
    if spec.ndim != 2 or 0 in spec.shape:
        raise ValidationError(f"spectrum must be a non-empty 2D array, got shape {spec.shape}")
    return np.fft.ifft2(np.fft.ifftshift(spec)).real


def frequency_grid(shape, centered=True):
    """Return ``(U, V)`` grids in cycles/pixel for an image of ``shape`` (H, W)."""
    h, w = shape
    u = np.fft.fftfreq(w)
    v = np.fft.fftfreq(h)
    if centered:
        u = np.fft.fftshift(u)
        v = np.fft.fftshift(v)
    return np.meshgrid(u, v)


def fold(freq):
    """Wrap frequencies into the Nyquist interval ``[-0.5, 0.5)``."""
    freq = np.asarray(freq, dtype=np.float64)
    return freq - np.floor(freq + 0.5)


def torus_distance(p, q):
    """Euclidean distance between frequencies on the periodic spectrum."""
    d = fold(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64))
    return np.sqrt(np.sum(d * d, axis=-1))


def band_profile(rho, radius):
    """Disk indicator of ``radius`` with a raised-cosine taper over its outer 10%.

    Exactly zero for ``rho >= radius`` so the stop band is attenuated
    completely; exactly one for ``rho <= 0.9 * radius``.
    """
    rho = np.asarray(rho, dtype=np.float64)
    inner = (1.0 - TAPER_FRACTION) * radius
    out = np.where(rho <= inner, 1.0, 0.0)
    edge = (rho > inner) & (rho < radius)
    out[edge] = 0.5 * (1.0 + np.cos(np.pi * (rho[edge] - inner) / (radius - inner)))
    return out


def lowpass_kernel(shape, radius):
    """Radial band profile centered on DC, in the unshifted FFT layout."""
    u, v = frequency_grid(shape, centered=False)
    return band_profile(np.hypot(u, v), radius)


def prefilter(img, radius):
    """Band-limit an image (or an (N, H, W) stack) to a disk of ``radius`` cycles/pixel.

    A disk that covers the whole Nyquist square (``radius >= sqrt(2)/2``)
    leaves the input unchanged.
    """
    radius = check_positive(radius, "radius")
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = check_image(arr)
    elif arr.ndim != 3 or 0 in arr.shape:
        raise ValidationError(f"prefilter expects an image or a stack of images, got shape {arr.shape}")
    if radius >= MAX_RADIUS:
        return arr.copy()
    kernel = lowpass_kernel(arr.shape[-2:], radius)
    return np.fft.ifft2(np.fft.fft2(arr) * kernel).real


def log_magnitude(spec):
    """``log(1 + |S|)`` scaled to ``[0, 1]``, for spectrum visualization."""
    mag = np.log1p(np.abs(np.asarray(spec)))
    peak = mag.max()
    return mag / peak if peak > 0 else mag
