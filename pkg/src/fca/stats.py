"""Patch-statistics comparison: the four per-pixel scoring methods.

All four compare the local sample distribution around each pixel against a
reference. `moments_score` and `histogram_score` use holistic patch
summaries; `sww_score` and `fca_score` use the rank correspondence that
falls out of the 1-D Wasserstein distance between equal-size sample sets:
sorting both sets and differencing samples of equal rank assigns each pixel
its own share of the distance (its "non-compliance"). FCA additionally lets
every pixel aggregate its non-compliance across all patches that contain
it, which is what localizes the offending pixels sharply.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InvalidParameter
from .grid import AnomalyMap, gaussian_kernel, gaussian_kernel_1d, default_radius


@dataclass(frozen=True)
class PatchConfig:
    """Patch geometry and weighting parameters shared by all comparators.

    sigma_w weights samples inside a single centered patch (SWW); sigma_p
    weights the surrounding patch centers a pixel aggregates over (FCA);
    sigma_s smooths each patch's error map before aggregation (0 disables).
    `uniform_sww` replaces the sigma_w weighting with a plain average,
    which makes the SWW score per patch the exact Wasserstein distance
    divided by the patch area.
    """

    patch_size: int = 9
    sigma_w: float = 3.0
    sigma_p: float = 3.0
    sigma_s: float = 1.0
    histogram_bins: int = 10
    uniform_sww: bool = False

    def __post_init__(self):
        t = self.patch_size
        if t < 1 or t % 2 == 0:
            raise InvalidParameter(f"patch_size must be odd and >= 1, got {t}")
        if self.sigma_w <= 0:
            raise InvalidParameter(f"sigma_w must be > 0, got {self.sigma_w}")
        if self.sigma_p <= 0:
            raise InvalidParameter(f"sigma_p must be > 0, got {self.sigma_p}")
        if self.sigma_s < 0:
            raise InvalidParameter(f"sigma_s must be >= 0, got {self.sigma_s}")
        if self.histogram_bins < 2:
            raise InvalidParameter(f"histogram_bins must be >= 2, got {self.histogram_bins}")

    @property
    def half(self):
        return self.patch_size // 2


class SortedReference:
    """Per-channel non-decreasing sample set of size T*T used as the comparison target."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.array(values, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise InvalidParameter(f"reference must be (channels, ranks), got shape {arr.shape}")
        if np.any(np.diff(arr, axis=1) < 0):
            raise InvalidParameter("reference values must be non-decreasing within each channel")
        arr.flags.writeable = False
        self.values = arr

    @property
    def channels(self):
        return self.values.shape[0]

    @property
    def ranks(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class NonComplianceMap:
    """Per-pixel matching error of one patch against a reference."""

    center: tuple
    values: np.ndarray


def _check_patch(fm, cfg):
    t = cfg.patch_size
    if fm.height < t or fm.width < t:
        raise InvalidParameter(
            f"feature map {fm.height}x{fm.width} is smaller than the {t}x{t} patch")


def _check_reference(fm, ref, cfg):
    if ref.channels != fm.channels:
        raise InvalidParameter(
            f"reference has {ref.channels} channels, feature map has {fm.channels}")
    if ref.ranks != cfg.patch_size ** 2:
        raise InvalidParameter(
            f"reference has {ref.ranks} ranks, expected {cfg.patch_size ** 2}")


def patch_window(fm, center, cfg):
    """The (T, T, C) window centered at (x, y); the patch must lie fully inside."""
    x, y = center
    h = cfg.half
    t = cfg.patch_size
    if y - h < 0 or x - h < 0 or y + h >= fm.height or x + h >= fm.width:
        raise InvalidParameter(f"patch at ({x}, {y}) exceeds the {fm.height}x{fm.width} map")
    return fm.data[y - h:y - h + t, x - h:x - h + t, :]


def sort_patch(window):
    """Stable per-channel sort of a (T, T, C) window in raster order.

    Returns (order, values): flat raster indices by rank and the sorted
    samples, each of shape (C, T*T). Ties keep raster order, which pins the
    per-pixel attribution of matching errors.
    """
    t = window.shape[0]
    flat = window.reshape(t * t, -1).T  # (C, R) raster order per channel
    order = np.argsort(flat, axis=1, kind="stable")
    return order, np.take_along_axis(flat, order, axis=1)


def noncompliance(fm, center, ref, cfg):
    """Per-pixel rank-matching error of the patch at `center` against `ref`.

    Per channel, the patch samples are stable-sorted and the pixel holding
    the rank-r sample receives |sorted[r] - ref[r]|; pixel values sum over
    channels. Summing the map over pixels therefore gives exactly the 1-D
    Wasserstein distance between patch and reference samples, per channel.
    """
    _check_reference(fm, ref, cfg)
    window = patch_window(fm, center, cfg)
    t = cfg.patch_size
    order, vals = sort_patch(window)
    out = np.zeros(t * t, dtype=np.float64)
    diffs = np.abs(vals - ref.values)
    for ch in range(fm.channels):
        out[order[ch]] += diffs[ch]
    return NonComplianceMap(center=tuple(center), values=out.reshape(t, t))


def _expand_to_full(centers_map, t, h, w):
    # Replicate the nearest valid center score into the border band.
    half = t // 2
    out = np.pad(centers_map, half, mode="edge")
    assert out.shape == (h, w)
    return out


def moments_score(fm, ref_mean, cfg):
    """Squared distance between each patch's mean feature vector and ref_mean."""
    _check_patch(fm, cfg)
    ref_mean = np.asarray(ref_mean, dtype=np.float64).reshape(-1)
    if ref_mean.shape[0] != fm.channels:
        raise InvalidParameter(
            f"ref_mean has {ref_mean.shape[0]} entries, feature map has {fm.channels} channels")
    k = backend.kernels()
    means = k.patch_means(fm.data, cfg.patch_size)
    centers = ((means - ref_mean) ** 2).sum(axis=2)
    return AnomalyMap(_expand_to_full(centers, cfg.patch_size, fm.height, fm.width))


def _check_unit_range(fm):
    if fm.data.min() < 0.0 or fm.data.max() > 1.0:
        raise InvalidParameter(
            "feature values must lie in [0, 1]; run normalize_channels first")


def check_histogram(ref_hist, channels, bins):
    """Validate a per-channel bin distribution and return it as (C, B) float64."""
    hist = np.asarray(ref_hist, dtype=np.float64)
    if hist.ndim == 1:
        hist = hist[np.newaxis, :]
    if hist.shape != (channels, bins):
        raise InvalidParameter(
            f"reference histogram must have shape ({channels}, {bins}), got {hist.shape}")
    if np.any(hist < 0) or np.any(np.abs(hist.sum(axis=1) - 1.0) > 1e-6):
        raise InvalidParameter("reference histogram rows must be non-negative and sum to 1")
    return hist


def bin_index(values, bins):
    """Uniform [0, 1] binning; the closing edge 1.0 falls in the last bin."""
    return np.minimum((np.asarray(values) * bins).astype(np.int64), bins - 1)


def histogram_score(fm, ref_hist, cfg):
    """Earth mover's distance between each patch's histogram and ref_hist.

    Histograms use `cfg.histogram_bins` uniform bins over [0, 1]; the EMD is
    the CDF-difference form of the 1-D Wasserstein distance with bin width
    1/B, summed over channels.
    """
    _check_patch(fm, cfg)
    _check_unit_range(fm)
    b = cfg.histogram_bins
    hist = check_histogram(ref_hist, fm.channels, b)
    ref_cdf = np.cumsum(hist, axis=1)
    k = backend.kernels()
    centers = k.hist_emd(fm.data, ref_cdf, cfg.patch_size)
    return AnomalyMap(_expand_to_full(centers, cfg.patch_size, fm.height, fm.width))


def _sww_weights(cfg):
    t = cfg.patch_size
    if cfg.uniform_sww:
        return np.full((t, t), 1.0 / (t * t))
    w = gaussian_kernel(cfg.sigma_w, cfg.half).weights.copy()
    return w / w.sum()


def smoothing_kernel_1d(cfg):
    """Separable error-map smoothing kernel, empty when sigma_s is 0."""
    if cfg.sigma_s == 0:
        return np.empty(0, dtype=np.float64)
    return gaussian_kernel_1d(cfg.sigma_s, default_radius(cfg.sigma_s), normalized=True)


def sww_score(fm, ref, cfg):
    """Weighted non-compliance of each pixel's own centered patch.

    S(x, y) sums the patch's error map against the reference with Gaussian
    weights (sigma_w) centered on (x, y), normalized to sum 1 over the patch.
    """
    _check_patch(fm, cfg)
    _check_reference(fm, ref, cfg)
    k = backend.kernels()
    centers = k.sww(fm.data, ref.values, cfg.patch_size, _sww_weights(cfg))
    return AnomalyMap(_expand_to_full(centers, cfg.patch_size, fm.height, fm.width))


def fca_score(fm, ref, cfg):
    """Per-pixel non-compliance aggregated over every patch containing the pixel.

    Each fully-inside patch computes its error map against the reference,
    optionally smoothed (sigma_s, replicate padding inside the patch), and
    deposits the pixel's value weighted by the center-to-pixel Gaussian
    (sigma_p). Pixel scores are normalized by their accumulated weight mass,
    so border pixels that see fewer patches stay comparable to the interior.
    """
    _check_patch(fm, cfg)
    _check_reference(fm, ref, cfg)
    t = cfg.patch_size
    gp = gaussian_kernel(cfg.sigma_p, cfg.half).weights
    k = backend.kernels()
    out = k.fca(fm.data, ref.values, t, np.ascontiguousarray(gp), smoothing_kernel_1d(cfg))
    return AnomalyMap(out)


SCORE_FUNCTIONS = {
    "moments": moments_score,
    "histogram": histogram_score,
    "sww": sww_score,
    "fca": fca_score,
}
