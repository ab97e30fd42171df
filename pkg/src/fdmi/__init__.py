"""Frequency-division multiplexed imaging.

Several sub-exposure images are multiplexed into one capture by exposure
masks with distinct spatial carriers and recovered by band-pass
demodulation in the Fourier domain.
"""

from importlib import metadata

from .analysis import (
    ResolutionReport,
    SpectrumPeak,
    StarChart,
    detect_plan,
    measure_limiting_radius,
    psnr,
    siemens_star,
    spectrum_report,
    star_resolution,
)
from .codec import (
    CaptureConfig,
    baseband_gain,
    capture_weights,
    decode_all,
    demodulation_gain,
    encode,
    extract_baseband,
    extract_sideband,
    render_slm_masks,
    simulate_capture,
)
from .exceptions import (
    FDMIError,
    MalformedHeaderError,
    ParseError,
    PlanningError,
    TruncatedPayloadError,
    UnresolvableError,
    UnsupportedMagicError,
    ValidationError,
)
from .estimators import BandLimiter, FDMIDecoder, FDMIEncoder, FlowInterpolator
from .flow import FlowField, LowTextureWarning, estimate_flow, interpolate_frames, warp
from .fourier import forward_spectrum, frequency_grid, inverse_spectrum, log_magnitude, prefilter
from .imageio import read_flow, read_image, read_plan, write_flow, write_image, write_plan
from .masks import MaskSpec, make_mask, mask_coefficient
from .plan import PlanEntry, SidebandPlan, Violation, check_plan, plan_disks, plan_sidebands

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
    __version__ = "0.1.0"

__all__ = [
    "BandLimiter", "CaptureConfig", "FDMIDecoder", "FDMIEncoder", "FlowInterpolator", "FDMIError", "FlowField", "LowTextureWarning", "MalformedHeaderError",
    "MaskSpec", "ParseError", "PlanEntry", "PlanningError", "ResolutionReport", "SidebandPlan",
    "SpectrumPeak", "StarChart", "TruncatedPayloadError", "UnresolvableError",
    "UnsupportedMagicError", "ValidationError", "Violation", "baseband_gain", "capture_weights",
    "check_plan", "decode_all", "demodulation_gain", "detect_plan", "encode", "estimate_flow",
    "extract_baseband", "extract_sideband", "forward_spectrum", "frequency_grid",
    "interpolate_frames", "inverse_spectrum", "log_magnitude", "make_mask", "mask_coefficient",
    "measure_limiting_radius", "plan_disks", "plan_sidebands", "prefilter", "psnr", "read_flow",
    "read_image", "read_plan", "render_slm_masks", "siemens_star", "simulate_capture",
    "spectrum_report", "star_resolution", "warp", "write_flow", "write_image", "write_plan",
]
