"""Quantitative evaluation: Siemens-star resolution, PSNR and spectrum peaks."""

import csv
from dataclasses import dataclass, field
import io
import json
import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .exceptions import UnresolvableError, ValidationError
from .fourier import torus_distance
from .masks import MaskSpec
from .plan import PlanEntry, SidebandPlan
from .validation import check_image, check_positive


@dataclass(frozen=True)
class StarChart:
    image: np.ndarray
    cycles: int
    center: tuple

    def __post_init__(self):
        img = check_image(self.image, "chart image")
        object.__setattr__(self, "image", img)
        if int(self.cycles) != self.cycles or self.cycles < 4:
            raise ValidationError(f"a Siemens star needs at least 4 cycles, got {self.cycles}")
        cx, cy = self.center
        h, w = img.shape
        if not (0 <= cx <= w - 1 and 0 <= cy <= h - 1):
            raise ValidationError(f"star center {self.center} lies outside the {w}x{h} image")


@dataclass
class ResolutionReport:
    limiting_radius: float
    resolution: float
    contrast_profile: list = field(default_factory=list)
    cycles: int = 0
    height: int = 0
    threshold: float = 0.1

    def to_dict(self):
        return {
            "limiting_radius": self.limiting_radius,
            "resolution": self.resolution,
            "cycles": self.cycles,
            "height": self.height,
            "threshold": self.threshold,
            "contrast_profile": [[r, c] for r, c in self.contrast_profile],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["radius", "contrast"])
        writer.writerows(self.contrast_profile)
        return buf.getvalue()


def siemens_star(width, height, cycles, contrast=1.0, center=None):
    """Point-sampled sinusoidal Siemens star ``0.5 + contrast/2 * cos(cycles * theta)``.

    The default center is pixel ``(width // 2, height // 2)``.
    """
    if width <= 0 or height <= 0:
        raise ValidationError(f"degenerate chart dimensions {width}x{height}")
    if not 0 <= contrast <= 1:
        raise ValidationError(f"contrast must lie in [0, 1], got {contrast}")
    if center is None:
        center = (width // 2, height // 2)
    cx, cy = center
    y, x = np.mgrid[0:height, 0:width]
    theta = np.arctan2(y - cy, x - cx)
    img = 0.5 + 0.5 * contrast * np.cos(cycles * theta)
    return StarChart(img, cycles, (cx, cy))


def star_resolution(cycles, height, radius):
    """Line widths per picture height resolved at ``radius`` pixels."""
    return cycles * height / (2.0 * math.pi * radius)


def angular_contrast(chart, radius, samples_per_period=4):
    """Michelson contrast of the star pattern on the circle of ``radius`` pixels.

    The circle is resampled bilinearly at uniform angles and demodulated at
    the star's angular frequency; averaging over one period at a time gives
    the local sinusoid amplitude ``A`` and mean ``m`` at every angle. The
    local Michelson contrast is ``A / m`` (the ``(max - min) / (max + min)``
    of that sinusoid) and the worst angle is returned, so lines must be
    distinguishable all around the circle.

    A pixel grid cannot carry a pattern whose period along the circle is
    shorter than 2 pixels; whatever is sampled there is aliasing, so such
    circles score 0.
    """
    if 2.0 * math.pi * radius < 2.0 * chart.cycles:
        return 0.0
    cx, cy = chart.center
    per = samples_per_period * max(1, math.ceil(2 * math.pi * radius / (samples_per_period * chart.cycles)))
    n = per * chart.cycles
    theta = 2 * np.pi * np.arange(n) / n
    xs = cx + radius * np.cos(theta)
    ys = cy + radius * np.sin(theta)
    profile = ndimage.map_coordinates(chart.image, [ys, xs], order=1, mode="nearest")
    carrier = np.exp(-1j * chart.cycles * theta)
    mean = ndimage.uniform_filter1d(profile, per, mode="wrap")
    re = ndimage.uniform_filter1d(profile * carrier.real, per, mode="wrap")
    im = ndimage.uniform_filter1d(profile * carrier.imag, per, mode="wrap")
    amplitude = 2.0 * np.hypot(re, im)
    with np.errstate(divide="ignore", invalid="ignore"):
        local = np.where(mean > 0, amplitude / mean, 0.0)
    return float(local.min())


def measure_limiting_radius(chart, threshold=0.1, max_radius=None):
    """Sweep 1-pixel annuli outward and find where the radial lines stay resolved.

    The limiting radius is the smallest radius from which the contrast
    stays at or above ``threshold`` for every larger measured radius.

    Raises
    ------
    UnresolvableError
        If the outermost measured annulus is already below threshold.
    """
    if not 0 < threshold < 1:
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    cx, cy = chart.center
    h, w = chart.image.shape
    edge = min(cx, cy, w - 1 - cx, h - 1 - cy)
    rmax = int(math.floor(edge if max_radius is None else min(edge, max_radius)))
    if rmax < 1:
        raise UnresolvableError("star center is too close to the image border to measure")
    radii = np.arange(1, rmax + 1, dtype=float)
    contrast = np.array([angular_contrast(chart, r) for r in radii])
    below = np.flatnonzero(contrast < threshold)
    if below.size == 0:
        limit = radii[0]
    elif below[-1] == radii.size - 1:
        raise UnresolvableError(
            f"contrast never stays above {threshold} out to radius {rmax} px"
        )
    else:
        limit = radii[below[-1] + 1]
    return ResolutionReport(
        limiting_radius=float(limit),
        resolution=star_resolution(chart.cycles, h, limit),
        contrast_profile=[(float(r), float(c)) for r, c in zip(radii, contrast)],
        cycles=int(chart.cycles),
        height=h,
        threshold=threshold,
    )


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    a = check_image(a, "a")
    b = check_image(b, "b")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    peak = check_positive(peak, "peak")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _signed_bin(k, n):
    return k if 2 * k <= n else k - n


class SpectrumPeak(NamedTuple):
    u: float
    v: float
    magnitude: float
    ratio: float  # magnitude relative to the DC bin


def spectrum_report(coded, min_peak_ratio=0.02, dc_exclusion=0.02, neighborhood=2):
    """Carrier candidates: local maxima of the magnitude spectrum.

    Peaks within ``dc_exclusion`` cycles/pixel of DC are ignored, the rest
    must reach ``min_peak_ratio * |DC|``. Conjugate pairs are reported once
    (``u > 0``, or ``u == 0`` and ``v > 0``; Nyquist bins as ``+0.5``),
    strongest first.
    """
    coded = check_image(coded, "coded")
    h, w = coded.shape
    mag = np.abs(np.fft.fft2(coded))
    dc = mag[0, 0]
    if dc == 0:
        return []
    size = 2 * int(neighborhood) + 1
    peaks = (mag == ndimage.maximum_filter(mag, size=size, mode="wrap")) & (mag >= min_peak_ratio * dc)
    u = np.fft.fftfreq(w)[None, :]
    v = np.fft.fftfreq(h)[:, None]
    peaks &= np.hypot(u, v) > dc_exclusion
    found = {}
    for kv, ku in zip(*np.nonzero(peaks)):
        su, sv = _signed_bin(ku, w), _signed_bin(kv, h)
        conj = (_signed_bin(-su % w, w), _signed_bin(-sv % h, h))
        key = max((su, sv), conj)
        m = float(mag[kv, ku])
        if key not in found or found[key] < m:
            found[key] = m
    out = [SpectrumPeak(cu / w, cv / h, m, m / dc) for (cu, cv), m in found.items()]
    out.sort(key=lambda p: (-p.magnitude, p.u, p.v))
    return out


def detect_plan(coded, count=None, min_peak_ratio=0.005, a=0.5, b=0.5):
    """Guess a decoding plan for a capture whose plan is unknown.

    The ``count`` strongest peaks of :func:`spectrum_report` are taken as
    cosine carriers of amplitude ``b`` over offset ``a`` (square masks where
    a carrier sits on the Nyquist edge). Every band, and the baseband, gets
    half the smallest distance between any two of DC and the carriers.
    """
    coded = check_image(coded, "coded")
    peaks = spectrum_report(coded, min_peak_ratio=min_peak_ratio)
    if count is not None:
        if int(count) != count or count < 1:
            raise ValidationError(f"count must be a positive integer, got {count}")
        if len(peaks) < count:
            raise UnresolvableError(f"found {len(peaks)} carrier peaks, {count} requested")
        peaks = peaks[: int(count)]
    if not peaks:
        raise UnresolvableError("no carrier peaks found in the capture spectrum")
    carriers = np.array([(p.u, p.v) for p in peaks])
    points = np.vstack([np.zeros((1, 2)), carriers, -carriers])
    dist = torus_distance(points[:, None, :], points[None, :, :])
    dist[np.diag_indices_from(dist)] = np.inf
    gap = float(dist.min())
    if gap <= 0:
        raise UnresolvableError("detected carriers coincide")
    radius = min(0.5 * gap, 0.5)
    entries = []
    for u, v in carriers:
        waveform = "square" if max(abs(u), abs(v)) >= 0.5 else "cosine"
        entries.append(PlanEntry(MaskSpec(waveform, u, v, a, b), radius))
    return SidebandPlan(tuple(entries), radius)
