"""Exposure-mask synthesis."""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import ValidationError

WAVEFORMS = ("cosine", "square", "constant")

# cos() values this close to zero count as an exact zero crossing (sgn(0) = +1)
_ZERO_CROSSING_TOL = 1e-9


@dataclass(frozen=True)
class MaskSpec:
    """Periodic exposure mask ``a + b * w(2*pi*(u0*x + v0*y) + phase)``.

    ``w`` is ``cos`` for ``"cosine"`` and ``sgn(cos)`` for ``"square"``;
    ``"constant"`` masks are ``a`` everywhere. Carriers are in cycles/pixel.
    """

    waveform: str = "cosine"
    u0: float = 0.0
    v0: float = 0.0
    a: float = 0.5
    b: float = 0.5
    phase: float = 0.0

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValidationError(f"waveform must be one of {WAVEFORMS}, got {self.waveform!r}")
        for name in ("u0", "v0", "a", "b", "phase"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ValidationError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.b < 0:
            raise ValidationError(f"amplitude b must be non-negative (got b={self.b})")
        if self.a < self.b:
            raise ValidationError(
                f"offset a must be >= amplitude b for a non-negative mask (got a={self.a}, b={self.b})"
            )
        nyq = max(abs(self.u0), abs(self.v0))
        if nyq > 0.5 or (nyq == 0.5 and self.waveform == "cosine"):
            raise ValidationError(
                f"carrier ({self.u0}, {self.v0}) exceeds Nyquist for a {self.waveform} mask; "
                "only square masks may sit exactly at 0.5 cycles/pixel"
            )
        if self.waveform == "constant" and self.b != 0:
            raise ValidationError(f"constant masks require b = 0 (got b={self.b})")

    @property
    def carrier(self):
        return (self.u0, self.v0)

    @property
    def is_modulated(self):
        return self.waveform != "constant" and (self.u0, self.v0) != (0.0, 0.0)


def _phase_argument(spec, shape):
    h, w = shape
    y, x = np.mgrid[0:h, 0:w]
    # reduce the cycle count before scaling by 2*pi so large coordinates stay exact
    cycles = np.mod(spec.u0 * x + spec.v0 * y, 1.0)
    return 2.0 * np.pi * cycles + spec.phase


def make_mask(spec, width, height):
    """Sample a mask at integer pixel centers; pixel (0, 0) has phase ``spec.phase``."""
    if width <= 0 or height <= 0:
        raise ValidationError(f"mask dimensions must be positive, got {width}x{height}")
    if spec.waveform == "constant":
        return np.full((height, width), spec.a)
    c = np.cos(_phase_argument(spec, (height, width)))
    if spec.waveform == "cosine":
        return spec.a + spec.b * c
    return spec.a + spec.b * np.where(c >= -_ZERO_CROSSING_TOL, 1.0, -1.0)


def carrier_bin(spec, shape, tol=1e-6):
    """Integer frequency bin ``(kv, ku)`` of the carrier on an image of ``shape``.

    Raises ValidationError when the carrier is not on the bin grid of the
    given dimensions.
    """
    h, w = shape
    fu, fv = spec.u0 * w, spec.v0 * h
    ku, kv = round(fu), round(fv)
    if abs(fu - ku) > tol or abs(fv - kv) > tol:
        raise ValidationError(
            f"dimension mismatch: carrier ({spec.u0}, {spec.v0}) is not on the frequency "
            f"grid of a {w}x{h} image (bins {fu:.4f}, {fv:.4f})"
        )
    return kv % h, ku % w


def mask_coefficient(spec, shape):
    """Normalized DFT coefficient of the sampled mask at its carrier bin.

    This is the complex weight with which a frame is copied onto the
    sideband at ``+carrier``. It equals ``b/2 * exp(i*phase)`` for on-grid
    cosines and tends to ``2b/pi`` for slow square waves; for the Nyquist
    one-on/one-off pattern both conjugate copies share the bin and it is ``b``.
    """
    h, w = shape
    kv, ku = carrier_bin(spec, shape)
    m = make_mask(spec, w, h)
    y, x = np.mgrid[0:h, 0:w]
    phasor = np.exp(-2j * np.pi * (np.mod(ku * x, w) / w + np.mod(kv * y, h) / h))
    return complex(np.mean(m * phasor))


def mask_dc(spec, shape):
    """Mean transmission of the sampled mask (its DC gain)."""
    if spec.waveform == "constant":
        return spec.a
    h, w = shape
    return float(np.mean(make_mask(spec, w, h)))
