"""Dense grid types and resampling primitives shared by all modules.

A FeatureMap is an H x W x C array in row-major (y, x, c) order; an
AnomalyMap is an H x W array of non-negative scores. Both own a private
float64 copy of their input and are treated as immutable afterwards, so
they can be shared freely across threads.
"""

import math

import numpy as np

from .errors import InvalidParameter


class FeatureMap:
    """H x W x C grid of real-valued features."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise InvalidParameter(f"feature map must be 2-D or 3-D, got shape {np.shape(data)}")
        if min(arr.shape) < 1:
            raise InvalidParameter(f"feature map dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter("feature map contains NaN or Inf")
        arr.flags.writeable = False
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"FeatureMap({self.height}x{self.width}x{self.channels})"


class AnomalyMap:
    """H x W grid of non-negative anomaly scores."""

    __slots__ = ("scores",)

    def __init__(self, scores):
        arr = np.array(scores, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise InvalidParameter(f"anomaly map must be 2-D, got shape {np.shape(scores)}")
        if min(arr.shape) < 1:
            raise InvalidParameter(f"anomaly map dimensions must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameter("anomaly map contains NaN or Inf")
        # Clamp the tiny negative excursions floating-point summation can produce.
        if arr.min() < 0:
            if arr.min() < -1e-9:
                raise InvalidParameter(f"anomaly scores must be >= 0, min is {arr.min()}")
            arr = np.maximum(arr, 0.0)
        arr.flags.writeable = False
        self.scores = arr

    @property
    def height(self):
        return self.scores.shape[0]

    @property
    def width(self):
        return self.scores.shape[1]

    @property
    def shape(self):
        return self.scores.shape

    def __repr__(self):
        return f"AnomalyMap({self.height}x{self.width})"


class GaussianKernel:
    """Square 2-D Gaussian weight grid of side 2*radius + 1."""

    __slots__ = ("sigma", "radius", "weights")

    def __init__(self, sigma, radius, weights):
        self.sigma = float(sigma)
        self.radius = int(radius)
        w = np.asarray(weights, dtype=np.float64)
        w.flags.writeable = False
        self.weights = w

    @property
    def side(self):
        return 2 * self.radius + 1


def default_radius(sigma):
    """Truncation radius used when none is given: ceil(3 * sigma)."""
    return int(math.ceil(3.0 * float(sigma)))


def gaussian_kernel(sigma, radius=None, normalized=False):
    """Build a 2-D Gaussian kernel with weights exp(-(dx^2+dy^2) / (2 sigma^2)).

    The center weight is always the maximum. With ``normalized`` the weights
    sum to 1, otherwise the center weight is exactly 1.
    """
    sigma = float(sigma)
    if sigma <= 0:
        raise InvalidParameter(f"sigma must be > 0, got {sigma}")
    if radius is None:
        radius = default_radius(sigma)
    radius = int(radius)
    if radius < 0:
        raise InvalidParameter(f"radius must be >= 0, got {radius}")
    d = np.arange(-radius, radius + 1, dtype=np.float64)
    sq = d[:, None] ** 2 + d[None, :] ** 2
    w = np.exp(-sq / (2.0 * sigma * sigma))
    if normalized:
        w /= w.sum()
    return GaussianKernel(sigma, radius, w)


def gaussian_kernel_1d(sigma, radius=None, normalized=True):
    """1-D counterpart of :func:`gaussian_kernel`, used for separable smoothing."""
    sigma = float(sigma)
    if sigma <= 0:
        raise InvalidParameter(f"sigma must be > 0, got {sigma}")
    if radius is None:
        radius = default_radius(sigma)
    d = np.arange(-int(radius), int(radius) + 1, dtype=np.float64)
    w = np.exp(-(d ** 2) / (2.0 * sigma * sigma))
    if normalized:
        w /= w.sum()
    return w


def normalize_channels(fm):
    """Rescale each channel to span [0, 1]; constant channels map to 0.

    Idempotent, and invariant to positive per-channel affine transforms of
    the input.
    """
    data = fm.data
    lo = data.min(axis=(0, 1))
    hi = data.max(axis=(0, 1))
    span = hi - lo
    out = np.zeros_like(data)
    live = span > 0
    if np.any(live):
        out[:, :, live] = (data[:, :, live] - lo[live]) / span[live]
    return FeatureMap(out)


def _resample_axis_coords(n_in, n_out):
    # Corner-aligned sampling: endpoints of the output grid hit the
    # endpoints of the input grid exactly.
    if n_out == 1 or n_in == 1:
        return np.zeros(n_out), np.zeros(n_out, dtype=np.intp)
    pos = np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)
    i0 = np.clip(np.floor(pos).astype(np.intp), 0, n_in - 2)
    frac = pos - i0
    return frac, i0


def resize_bilinear(arr, out_h, out_w):
    """Bilinear, corner-aligned resize of a 2-D or 3-D (H, W[, C]) array."""
    out_h = int(out_h)
    out_w = int(out_w)
    if out_h < 1 or out_w < 1:
        raise InvalidParameter(f"output size must be >= 1, got {out_h}x{out_w}")
    arr = np.asarray(arr, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, np.newaxis]
    h, w, _ = arr.shape
    fy, iy = _resample_axis_coords(h, out_h)
    fx, ix = _resample_axis_coords(w, out_w)
    top = arr[iy][:, ix] * (1 - fx)[None, :, None] + arr[iy][:, np.minimum(ix + 1, w - 1)] * fx[None, :, None]
    bot = arr[np.minimum(iy + 1, h - 1)][:, ix] * (1 - fx)[None, :, None] \
        + arr[np.minimum(iy + 1, h - 1)][:, np.minimum(ix + 1, w - 1)] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return out[:, :, 0] if squeeze else out


def upsample_bilinear(am, out_h, out_w):
    """Resample an AnomalyMap to out_h x out_w with corner-aligned bilinear interpolation."""
    return AnomalyMap(resize_bilinear(am.scores, out_h, out_w))
