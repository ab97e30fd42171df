"""Input validation helpers used across the package."""

import math

import numpy as np

from .exceptions import ValidationError


def check_image(img, name="image", nonnegative=False):
    """Return ``img`` as a finite 2D float64 array of positive size."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError(f"{name} has degenerate dimensions {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if nonnegative and np.any(arr < 0):
        raise ValidationError(f"{name} contains negative values")
    return arr


def check_stack(images, name="frames", nonnegative=False):
    """Return a list/array of equally sized images as an (N, H, W) float64 array."""
    if isinstance(images, np.ndarray) and images.ndim == 3:
        arr = np.asarray(images, dtype=np.float64)
    else:
        images = list(images)
        if not images:
            raise ValidationError(f"{name} must contain at least one image")
        checked = [check_image(im, f"{name}[{i}]") for i, im in enumerate(images)]
        shapes = {im.shape for im in checked}
        if len(shapes) != 1:
            raise ValidationError(f"dimension mismatch among {name}: {sorted(shapes)}")
        arr = np.stack(checked)
    if arr.shape[0] == 0:
        raise ValidationError(f"{name} must contain at least one image")
    if arr.shape[1] == 0 or arr.shape[2] == 0:
        raise ValidationError(f"{name} have degenerate dimensions {arr.shape[1:]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contain non-finite values")
    if nonnegative and np.any(arr < 0):
        raise ValidationError(f"{name} contain negative values")
    return arr


def check_positive(value, name):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value}")
    return value


def check_nonnegative(value, name):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{name} must be a non-negative finite number, got {value}")
    return value


def check_choice(value, choices, name):
    if value not in choices:
        raise ValidationError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value
