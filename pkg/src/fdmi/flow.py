"""Dense optical flow and flow-based intermediate frame synthesis."""

from dataclasses import dataclass
import warnings

import numpy as np
from scipy import ndimage

from .exceptions import ValidationError
from .validation import check_image, check_positive

# Horn-Schunck neighbourhood average (the classic 3x3 weights, center excluded)
_HS_KERNEL = np.array([[1, 2, 1], [2, 0, 2], [1, 2, 1]], dtype=np.float64) / 12.0

# smoothness weights are expressed on an 8-bit gray scale
_INTENSITY_SCALE = 255.0

# images whose standard deviation is below this carry no usable gradient
_TEXTURE_FLOOR = 1e-6


class LowTextureWarning(UserWarning):
    """Raised (as a warning) when a flow estimate had nothing to track."""


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement ``vectors[y, x] = (dx, dy)`` from frame 1 toward frame 2."""

    vectors: np.ndarray
    low_texture: bool = False

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 2 or 0 in v.shape[:2]:
            raise ValidationError(f"flow vectors must have shape (H, W, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("flow vectors must be finite")
        object.__setattr__(self, "vectors", v)

    @property
    def height(self):
        return self.vectors.shape[0]

    @property
    def width(self):
        return self.vectors.shape[1]

    @property
    def shape(self):
        return self.vectors.shape[:2]

    @property
    def dx(self):
        return self.vectors[..., 0]

    @property
    def dy(self):
        return self.vectors[..., 1]

    def scaled(self, t):
        """Flow multiplied by ``t`` (the displacement after a fraction of the motion)."""
        return FlowField(t * self.vectors, self.low_texture)

    @classmethod
    def zeros(cls, shape, low_texture=False):
        return cls(np.zeros(tuple(shape) + (2,)), low_texture)


def _sample(img, x, y):
    """Bilinear samples of ``img`` at float coordinates, clamped to the edge."""
    return ndimage.map_coordinates(img, [y, x], order=1, mode="nearest")


def _downsample(img, shape):
    smooth = ndimage.gaussian_filter(img, 1.0, mode="nearest")
    h, w = img.shape
    zoom = (shape[0] / h, shape[1] / w)
    return ndimage.zoom(smooth, zoom, order=1, mode="nearest", grid_mode=True)


def _upsample_flow(u, v, shape):
    h, w = u.shape
    zoom = (shape[0] / h, shape[1] / w)
    up = lambda f: ndimage.zoom(f, zoom, order=1, mode="nearest", grid_mode=True)
    return up(u) * zoom[1], up(v) * zoom[0]


def _pyramid_shapes(shape, scale, levels, min_size):
    shapes = [tuple(shape)]
    while len(shapes) < levels:
        h, w = shapes[-1]
        nh, nw = int(round(h * scale)), int(round(w * scale))
        if min(nh, nw) < min_size:
            break
        shapes.append((nh, nw))
    return shapes


def _horn_schunck(i1, i2, u, v, alpha, iterations):
    """Refine ``(u, v)`` on one level: linearize around the current flow, then Jacobi-iterate."""
    h, w = i1.shape
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    i2w = _sample(i2, x + u, y + v)
    # gradients averaged over both frames are less biased by the warp
    gy1, gx1 = np.gradient(i1)
    gy2, gx2 = np.gradient(i2w)
    ix, iy = 0.5 * (gx1 + gx2), 0.5 * (gy1 + gy2)
    rho = i2w - i1 - ix * u - iy * v
    denom = alpha * alpha + ix * ix + iy * iy
    for _ in range(iterations):
        ubar = ndimage.convolve(u, _HS_KERNEL, mode="nearest")
        vbar = ndimage.convolve(v, _HS_KERNEL, mode="nearest")
        r = (ix * ubar + iy * vbar + rho) / denom
        u = ubar - ix * r
        v = vbar - iy * r
    return u, v


def estimate_flow(img1, img2, alpha=20.0, iterations=50, levels=5, scale=0.5, warps=3, min_size=16):
    """Coarse-to-fine Horn-Schunck flow from ``img1`` to ``img2``.

    Parameters
    ----------
    img1, img2 : (H, W) arrays
        Intensities nominally in [0, 1].
    alpha : float
        Smoothness weight, on a 0-255 gray scale (images are rescaled
        internally so the default suits 8-bit-like contrast).
    iterations : int
        Jacobi iterations per warp.
    levels, scale, min_size
        Pyramid depth, downscale factor per level and smallest side allowed.
    warps : int
        Re-linearizations per pyramid level.

    Returns
    -------
    FlowField
        ``low_texture`` is set (and a :class:`LowTextureWarning` issued) when
        either image is constant; the flow is then zero.
    """
    i1 = check_image(img1, "img1")
    i2 = check_image(img2, "img2")
    if i1.shape != i2.shape:
        raise ValidationError(f"dimension mismatch: {i1.shape} vs {i2.shape}")
    alpha = check_positive(alpha, "alpha")
    if not 0 < scale < 1:
        raise ValidationError(f"pyramid scale must lie in (0, 1), got {scale}")
    for name, value in (("iterations", iterations), ("levels", levels), ("warps", warps)):
        if int(value) != value or value < 1:
            raise ValidationError(f"{name} must be a positive integer, got {value}")
    if i1.std() < _TEXTURE_FLOOR or i2.std() < _TEXTURE_FLOOR:
        warnings.warn("low-texture input: flow set to zero", LowTextureWarning, stacklevel=2)
        return FlowField.zeros(i1.shape, low_texture=True)

    shapes = _pyramid_shapes(i1.shape, scale, int(levels), min_size)
    p1, p2 = [i1 * _INTENSITY_SCALE], [i2 * _INTENSITY_SCALE]
    for shp in shapes[1:]:
        p1.append(_downsample(p1[-1], shp))
        p2.append(_downsample(p2[-1], shp))

    u = np.zeros(shapes[-1])
    v = np.zeros(shapes[-1])
    for lvl in range(len(shapes) - 1, -1, -1):
        if u.shape != shapes[lvl]:
            u, v = _upsample_flow(u, v, shapes[lvl])
        for _ in range(int(warps)):
            u, v = _horn_schunck(p1[lvl], p2[lvl], u, v, alpha, int(iterations))
    return FlowField(np.stack([u, v], axis=-1))


def _check_fraction(t):
    if isinstance(t, bool) or not isinstance(t, (int, float, np.integer, np.floating)):
        raise ValidationError(f"t must be a number in [0, 1], got {t!r}")
    if not 0 <= t <= 1:
        raise ValidationError(f"t must lie in [0, 1], got {t}")
    return float(t)


def warp(img, flow, t=1.0):
    """Backward-warp ``img`` by ``t * flow``: ``out(p) = img(p - t * flow(p))``.

    Samples are bilinear and clamp to the border. With the flow from frame 1
    to frame 2, ``t=1`` predicts frame 2 from frame 1. ``t=0`` returns a copy.
    """
    img = check_image(img, "img")
    t = _check_fraction(t)
    if img.shape != flow.shape:
        raise ValidationError(f"dimension mismatch: image {img.shape} vs flow {flow.shape}")
    if t == 0:
        return img.copy()
    h, w = img.shape
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    return _sample(img, x - t * flow.dx, y - t * flow.dy)


def interpolate_frames(img1, img2, flow, n):
    """``n`` frames at ``t_k = k/(n-1)``, each warped from ``img1`` by ``t_k * flow``.

    Only ``img1`` is warped; ``img2`` is used for validation. Frame 0 is
    ``img1`` itself (as a copy).
    """
    i1 = check_image(img1, "img1")
    i2 = check_image(img2, "img2")
    if i1.shape != i2.shape:
        raise ValidationError(f"dimension mismatch: {i1.shape} vs {i2.shape}")
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ValidationError(f"need at least 2 frames, got {n}")
    n = int(n)
    return [warp(i1, flow, k / (n - 1)) for k in range(n)]


def textured_image(width, height, seed=0, sigma=2.0):
    """Smooth random texture in [0, 1], periodic so it can be rolled without seams."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((height, width))
    tex = ndimage.gaussian_filter(noise, sigma, mode="wrap")
    tex -= tex.min()
    peak = tex.max()
    return tex / peak if peak > 0 else tex


def flow_error(flow, true_dx, true_dy, border=0):
    """Median end-point error against a constant true displacement."""
    v = flow.vectors
    if border:
        v = v[border:-border, border:-border]
    return float(np.median(np.hypot(v[..., 0] - true_dx, v[..., 1] - true_dy)))

