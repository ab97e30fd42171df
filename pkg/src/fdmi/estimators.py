"""scikit-learn style wrappers around the functional API.

The estimators operate on image stacks rather than feature matrices: ``X``
is an (N, H, W) array of frames for :class:`BandLimiter` and
:class:`FDMIEncoder`, a single (H, W) capture for :class:`FDMIDecoder`, and
an image pair for :class:`FlowInterpolator`. They support ``get_params`` /
``set_params`` / ``clone`` and raise ``NotFittedError`` before ``fit``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .analysis import detect_plan
from .codec import CaptureConfig, decode_all, render_slm_masks, simulate_capture
from .exceptions import ValidationError
from .flow import estimate_flow, interpolate_frames
from .fourier import prefilter
from .plan import plan_sidebands
from .validation import check_image, check_stack


class BandLimiter(TransformerMixin, BaseEstimator):
    """Prefilter frames to a disk of ``radius`` cycles/pixel."""

    def __init__(self, radius=0.25):
        self.radius = radius

    def fit(self, X, y=None):
        X = check_stack(X)
        self.shape_ = X.shape[1:]
        return self

    def transform(self, X):
        check_is_fitted(self, "shape_")
        X = check_stack(X)
        if X.shape[1:] != self.shape_:
            raise ValidationError(f"dimension mismatch: fitted on {self.shape_}, got {X.shape[1:]}")
        return prefilter(X, self.radius)


class FDMIEncoder(TransformerMixin, BaseEstimator):
    """Multiplex a stack of frames into one coded capture.

    ``fit`` plans the sidebands (unless ``plan`` is given) and renders the
    masks; ``transform`` simulates the capture and ``inverse_transform``
    decodes it back into frames.
    """

    def __init__(self, plan=None, waveform="cosine", band_radius="auto", durations=None,
                 pitch_ratio=1.0, noise_sigma=0.0, normalization="average", random_state=None):
        self.plan = plan
        self.waveform = waveform
        self.band_radius = band_radius
        self.durations = durations
        self.pitch_ratio = pitch_ratio
        self.noise_sigma = noise_sigma
        self.normalization = normalization
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_stack(X, nonnegative=True)
        n, h, w = X.shape
        plan = self.plan
        if plan is None:
            plan = plan_sidebands(n, self.waveform, self.band_radius, shape=(h, w))
        if len(plan) != n:
            raise ValidationError(f"count mismatch: {n} frames for a {len(plan)}-entry plan")
        self.plan_ = plan
        self.config_ = CaptureConfig(plan, self.durations, self.pitch_ratio, self.noise_sigma, self.normalization)
        self.masks_ = render_slm_masks(plan, (h, w), self.pitch_ratio)
        return self

    def transform(self, X):
        check_is_fitted(self, "plan_")
        return simulate_capture(self.config_, X, rng=self.random_state)

    def inverse_transform(self, coded, baseband=False):
        check_is_fitted(self, "plan_")
        return decode_all(coded, self.plan_, baseband, self.config_.durations, self.normalization)


class FDMIDecoder(BaseEstimator):
    """Recover sub-exposure frames from a capture.

    With ``plan=None`` the carriers are detected in the spectrum of the
    capture passed to ``fit`` (``n_frames`` strongest peaks).
    """

    def __init__(self, plan=None, n_frames=None, baseband=False, durations=None,
                 normalization="average", min_peak_ratio=0.005):
        self.plan = plan
        self.n_frames = n_frames
        self.baseband = baseband
        self.durations = durations
        self.normalization = normalization
        self.min_peak_ratio = min_peak_ratio

    def fit(self, coded, y=None):
        coded = check_image(coded, "coded")
        if self.plan is None:
            self.plan_ = detect_plan(coded, self.n_frames, self.min_peak_ratio)
        else:
            self.plan_ = self.plan
        self.shape_ = coded.shape
        return self

    def transform(self, coded):
        check_is_fitted(self, "plan_")
        return decode_all(coded, self.plan_, self.baseband, self.durations, self.normalization)

    def fit_transform(self, coded, y=None):
        return self.fit(coded).transform(coded)


class FlowInterpolator(BaseEstimator):
    """Estimate the flow between two frames and synthesize ``n_frames`` in between."""

    def __init__(self, n_frames=16, alpha=20.0, iterations=50, levels=5, warps=3):
        self.n_frames = n_frames
        self.alpha = alpha
        self.iterations = iterations
        self.levels = levels
        self.warps = warps

    def fit(self, X, y=None):
        img1, img2 = self._pair(X)
        self.flow_ = estimate_flow(img1, img2, alpha=self.alpha, iterations=self.iterations,
                                   levels=self.levels, warps=self.warps)
        return self

    def transform(self, X):
        check_is_fitted(self, "flow_")
        img1, img2 = self._pair(X)
        return np.stack(interpolate_frames(img1, img2, self.flow_, self.n_frames))

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    @staticmethod
    def _pair(X):
        X = check_stack(X, "image pair")
        if X.shape[0] != 2:
            raise ValidationError(f"expected an image pair, got {X.shape[0]} images")
        return X[0], X[1]
