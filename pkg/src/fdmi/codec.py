"""Forward model (exposure encoding, capture simulation) and Fourier decoding."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np

from .exceptions import ValidationError
from .fourier import lowpass_kernel, prefilter, torus_distance
from .masks import carrier_bin, make_mask, mask_coefficient, mask_dc
from .plan import PlanEntry, SidebandPlan, plan_disks
from .validation import (
    check_choice,
    check_image,
    check_nonnegative,
    check_positive,
    check_stack,
)

NORMALIZATIONS = ("average", "sum")


def duration_weights(durations, n):
    """Per-frame weights ``duration_i / T``; all ones when ``durations`` is None."""
    if durations is None:
        return np.ones(n)
    d = np.asarray(durations, dtype=np.float64).ravel()
    if d.size != n:
        raise ValidationError(f"expected {n} durations, got {d.size}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValidationError("durations must be finite and non-negative")
    total = d.sum()
    if total <= 0:
        raise ValidationError("total exposure duration must be positive")
    return d / total


def encode(frames, masks, normalization="average", durations=None):
    """Capture produced by modulating each frame with its mask and integrating.

    Returns ``sum_i w_i * m_i * I_i`` (divided by the frame count for
    ``normalization="average"``), where ``w_i = duration_i / T`` or 1.
    """
    check_choice(normalization, NORMALIZATIONS, "normalization")
    frames = check_stack(frames, "frames", nonnegative=True)
    masks = check_stack(masks, "masks")
    if frames.shape[0] != masks.shape[0]:
        raise ValidationError(f"count mismatch: {frames.shape[0]} frames but {masks.shape[0]} masks")
    if frames.shape[1:] != masks.shape[1:]:
        raise ValidationError(f"dimension mismatch: frames {frames.shape[1:]} vs masks {masks.shape[1:]}")
    w = duration_weights(durations, frames.shape[0])
    coded = np.einsum("i,ihw,ihw->hw", w, masks, frames)
    if normalization == "average":
        coded /= frames.shape[0]
    return coded


@dataclass(frozen=True)
class CaptureConfig:
    """Exposure schedule of a simulated capture.

    ``pitch_ratio`` is the number of sensor pixels spanned by one SLM pixel.
    Without ``durations`` every frame enters with weight 1 (see :func:`encode`);
    with them, frame ``i`` is weighted by ``durations[i] / T``.
    """

    plan: SidebandPlan
    durations: tuple = None
    pitch_ratio: float = 1.0
    noise_sigma: float = 0.0
    normalization: str = "average"

    def __post_init__(self):
        n = len(self.plan)
        if n == 0:
            raise ValidationError("capture plan has no entries")
        if self.durations is not None:
            durations = tuple(float(d) for d in self.durations)
            duration_weights(durations, n)
            object.__setattr__(self, "durations", durations)
        if not math.isfinite(self.pitch_ratio) or self.pitch_ratio < 1:
            raise ValidationError(f"pitch_ratio must be >= 1, got {self.pitch_ratio}")
        check_nonnegative(self.noise_sigma, "noise_sigma")
        check_choice(self.normalization, NORMALIZATIONS, "normalization")

    @property
    def total_duration(self):
        """Exposure period ``T``; frames without durations count one unit each."""
        return float(len(self.plan)) if self.durations is None else sum(self.durations)


def render_slm_masks(plan, shape, pitch_ratio=1.0):
    """Masks rendered on the SLM grid and replicated onto the sensor grid."""
    h, w = shape
    if pitch_ratio == 1:
        return np.stack([make_mask(m, w, h) for m in plan.masks])
    sh, sw = math.ceil(h / pitch_ratio), math.ceil(w / pitch_ratio)
    rows = np.minimum((np.arange(h) / pitch_ratio).astype(int), sh - 1)
    cols = np.minimum((np.arange(w) / pitch_ratio).astype(int), sw - 1)
    return np.stack([make_mask(m, sw, sh)[np.ix_(rows, cols)] for m in plan.masks])


def simulate_capture(config, frames, rng=None):
    """Simulate a coded capture of ``frames`` through an SLM.

    Masks are drawn on the SLM grid (sensor size / pitch, rounded up),
    block-replicated to the sensor, applied with :func:`encode`, corrupted
    by additive Gaussian noise and clamped to be non-negative.
    """
    frames = check_stack(frames, "frames", nonnegative=True)
    if frames.shape[0] != len(config.plan):
        raise ValidationError(f"count mismatch: {frames.shape[0]} frames for a {len(config.plan)}-entry plan")
    masks = render_slm_masks(config.plan, frames.shape[1:], config.pitch_ratio)
    coded = encode(frames, masks, config.normalization, config.durations)
    if config.noise_sigma > 0:
        rng = np.random.default_rng(rng)
        coded = coded + rng.normal(0.0, config.noise_sigma, coded.shape)
    return np.maximum(coded, 0.0)


# --------------------------------------------------------------------------
# decoding


def _as_entry(entry):
    if isinstance(entry, PlanEntry):
        return entry
    mask, radius = entry
    return PlanEntry(mask, radius)


def demodulation_gain(entry, shape):
    """Complex factor that maps the ``+carrier`` sideband back to frame scale.

    It is the reciprocal of the sampled mask's Fourier coefficient at the
    carrier bin: ``2/b`` for on-grid cosines, about ``pi/(2b)`` for slow
    square waves.
    """
    entry = _as_entry(entry)
    coef = mask_coefficient(entry.mask, shape)
    if abs(coef) < 1e-12:
        raise ValidationError(f"mask at carrier {entry.mask.carrier} has no energy at its carrier bin")
    return 1.0 / coef


def _check_sideband(entry, shape):
    spec = entry.mask
    if not spec.is_modulated:
        raise ValidationError("entry has a zero carrier; use extract_baseband for the DC band")
    if entry.band_radius > 0.5:
        raise ValidationError(f"band radius {entry.band_radius} exceeds the Nyquist square once centered")
    return carrier_bin(spec, shape)


def _demodulate(spectrum, kv, ku, kernel, gain):
    band = np.roll(spectrum, (-kv, -ku), axis=(0, 1)) * kernel
    # the real part of the inverse is the inverse of the Hermitian-symmetrized band
    return np.fft.ifft2(band * gain).real


def capture_weights(n, normalization="average", durations=None):
    """Weight with which each frame enters a capture: ``w_i`` (over ``N`` when averaged)."""
    check_choice(normalization, NORMALIZATIONS, "normalization")
    w = duration_weights(durations, n)
    return w / n if normalization == "average" else w


def extract_sideband(coded, entry, gain=None, weight=1.0):
    """Recover one sub-exposure image from its sideband.

    The spectrum is masked to a disk of ``band_radius`` around
    ``+carrier``, shifted so the carrier lands on DC, inverse transformed
    and scaled by the demodulation gain.

    Parameters
    ----------
    coded : (H, W) array
        Coded capture.
    entry : PlanEntry or (MaskSpec, band_radius)
        Carrier must sit on the frequency grid of ``coded``.
    gain : complex, optional
        Override for :func:`demodulation_gain`, e.g. for masks that were
        block-replicated from a coarser SLM grid.
    weight : float, optional
        Weight of this frame in the capture (see :func:`capture_weights`);
        the result is divided by it. With the default of 1 the output is
        the sideband at mask scale.
    """
    coded = check_image(coded, "coded")
    entry = _as_entry(entry)
    kv, ku = _check_sideband(entry, coded.shape)
    if gain is None:
        gain = demodulation_gain(entry, coded.shape)
    weight = check_positive(weight, "weight")
    kernel = lowpass_kernel(coded.shape, entry.band_radius)
    return _demodulate(np.fft.fft2(coded), kv, ku, kernel, gain / weight)


def baseband_gain(plan, shape, normalization="average", durations=None):
    """Effective DC gain of a capture: ``s * sum_i w_i * mean(m_i)``."""
    check_choice(normalization, NORMALIZATIONS, "normalization")
    n = len(plan)
    if n == 0:
        return 1.0
    w = duration_weights(durations, n)
    dc = np.array([mask_dc(m, shape) for m in plan.masks])
    gain = float(np.dot(w, dc))
    if normalization == "average":
        gain /= n
    if gain <= 0:
        raise ValidationError("plan has zero DC transmission; the baseband is empty")
    return gain


def _check_baseband_clear(plan, radius):
    for d in plan_disks(plan, baseband_radius=radius)[1:]:
        gap = torus_distance(np.array(d.center), np.zeros(2))
        if radius + d.radius - gap > 1e-12:
            raise ValidationError(
                f"baseband disk of radius {radius:g} overlaps {d.label} (radius {d.radius:g})"
            )


def extract_baseband(coded, baseband_radius, plan, durations=None, normalization="average"):
    """Full-exposure image from the DC band.

    Low-passes ``coded`` and divides by :func:`baseband_gain`, so the
    result approximates the duration-weighted mean of the frames.
    """
    coded = check_image(coded, "coded")
    radius = check_positive(baseband_radius, "baseband_radius")
    _check_baseband_clear(plan, radius)
    return prefilter(coded, radius) / baseband_gain(plan, coded.shape, normalization, durations)


def _worker_count(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("FDMI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"FDMI_THREADS must be an integer, got {env!r}") from None
    return 1


def decode_all(coded, plan, baseband=False, durations=None, normalization="average", workers=None):
    """Extract every sideband of a plan (and optionally the baseband) from one capture.

    The forward transform is computed once and shared by all entries.
    Each frame is rescaled by its capture weight, so the output estimates
    the frames that were passed to :func:`encode`.
    ``workers`` (or the ``FDMI_THREADS`` environment variable) caps the
    number of threads used for the per-entry inverse transforms.

    Returns an (N, H, W) array, or (N + 1, H, W) with the baseband last.
    """
    coded = check_image(coded, "coded")
    shape = coded.shape
    bins = [_check_sideband(e, shape) for e in plan.entries]
    weights = capture_weights(len(plan), normalization, durations) if len(plan) else []
    spectrum = np.fft.fft2(coded)

    def one(i):
        entry = plan.entries[i]
        kv, ku = bins[i]
        if weights[i] <= 0:
            raise ValidationError(f"entry {i} has zero exposure duration; nothing to extract")
        kernel = lowpass_kernel(shape, entry.band_radius)
        gain = demodulation_gain(entry, shape) / weights[i]
        return _demodulate(spectrum, kv, ku, kernel, gain)

    n_workers = _worker_count(workers)
    if n_workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            out = list(pool.map(one, range(len(plan))))
    else:
        out = [one(i) for i in range(len(plan))]
    if baseband:
        out.append(extract_baseband(coded, plan.baseband_radius, plan, durations, normalization))
    return np.stack(out) if out else np.zeros((0,) + shape)
