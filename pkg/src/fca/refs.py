"""Reference selection: the comparison targets each scoring method runs against.

Global aggregates (mean, histogram, rank-wise median), randomly sampled
patches, every patch, or per-query k-nearest patches. The rank-wise median
reference is the minimizer of the summed 1-D Wasserstein distance to all
patches: the L1 objective separates per sorted position, so taking the
median of each order statistic over all patches solves it in closed form.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from . import backend
from .errors import InvalidParameter
from .grid import AnomalyMap, gaussian_kernel
from .stats import (
    SortedReference,
    _check_patch,
    _check_unit_range,
    _expand_to_full,
    _sww_weights,
    bin_index,
    patch_window,
    smoothing_kernel_1d,
    sort_patch,
)

STRATEGIES = (
    "global-mean",
    "global-hist",
    "median-order",
    "random-patches",
    "knn",
    "all-patches",
)


@dataclass(frozen=True)
class ReferenceSpec:
    """How the comparison target(s) are chosen.

    `count` is the number of patches for random-patches and k for knn.
    `self_exclusion_radius` (knn) drops candidates within that Chebyshev
    distance of the query center; None means the patch size. All-patches
    compares every patch against every other patch, which is quadratic in
    the pixel count, so it must be opted into via `acknowledge_cost`.
    """

    strategy: str = "median-order"
    count: int = 10
    seed: int = 0
    self_exclusion_radius: Optional[int] = None
    acknowledge_cost: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidParameter(
                f"reference strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.strategy in ("random-patches", "knn") and self.count < 1:
            raise InvalidParameter(f"count must be >= 1, got {self.count}")
        if self.self_exclusion_radius is not None and self.self_exclusion_radius < 0:
            raise InvalidParameter(
                f"self_exclusion_radius must be >= 0, got {self.self_exclusion_radius}")


def global_mean_reference(fm):
    """Per-channel mean over all pixels."""
    return fm.data.mean(axis=(0, 1))


def global_histogram_reference(fm, bins):
    """Per-channel normalized histogram over all pixels; values must be in [0, 1]."""
    if bins < 2:
        raise InvalidParameter(f"bins must be >= 2, got {bins}")
    _check_unit_range(fm)
    n = fm.height * fm.width
    idx = bin_index(fm.data, bins)
    out = np.empty((fm.channels, bins), dtype=np.float64)
    for ch in range(fm.channels):
        out[ch] = np.bincount(idx[:, :, ch].reshape(-1), minlength=bins) / n
    return out


def median_order_statistics_reference(fm, cfg):
    """Rank-wise median over all fully-inside patches, per channel.

    This is the closed-form minimizer of the total Wasserstein distance to
    the patches; its output is non-decreasing per channel because medians
    preserve the order of the sorted positions.
    """
    _check_patch(fm, cfg)
    k = backend.kernels()
    return SortedReference(k.rank_medians(fm.data, cfg.patch_size))


def patch_sorted_reference(fm, center, cfg):
    """A single patch's per-channel sorted sample set."""
    _, vals = sort_patch(patch_window(fm, center, cfg))
    return SortedReference(vals)


def patch_mean_reference(fm, center, cfg):
    """A single patch's per-channel mean vector."""
    window = patch_window(fm, center, cfg)
    return window.mean(axis=(0, 1))


def patch_histogram_reference(fm, center, cfg, bins):
    """A single patch's per-channel normalized histogram over [0, 1]."""
    window = patch_window(fm, center, cfg)
    idx = bin_index(window, bins)
    out = np.empty((fm.channels, bins), dtype=np.float64)
    for ch in range(fm.channels):
        out[ch] = np.bincount(idx[:, :, ch].reshape(-1), minlength=bins) / (cfg.patch_size ** 2)
    return out


def all_patch_centers(fm, cfg):
    """(x, y) of every fully-inside patch center, raster order."""
    h = cfg.half
    ys, xs = np.mgrid[h:fm.height - h, h:fm.width - h]
    return np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1)


def random_patch_centers(fm, cfg, spec):
    """Uniform sample of `spec.count` distinct patch centers, fixed by the seed."""
    centers = all_patch_centers(fm, cfg)
    if spec.count > len(centers):
        raise InvalidParameter(
            f"requested {spec.count} patches but only {len(centers)} centers exist")
    rng = np.random.default_rng(spec.seed)
    pick = rng.choice(len(centers), size=spec.count, replace=False)
    return centers[pick]


def random_patch_references(fm, cfg, spec):
    """Sorted sample sets of `spec.count` randomly chosen patches."""
    if spec.strategy != "random-patches":
        raise InvalidParameter(f"expected random-patches strategy, got {spec.strategy!r}")
    return [patch_sorted_reference(fm, (x, y), cfg) for x, y in random_patch_centers(fm, cfg, spec)]


def _sorted_window_stack(fm, cfg):
    """(P, C, R) stable-sorted samples and (P, C, R) raster orders of all patches."""
    t = cfg.patch_size
    hc = fm.height - t + 1
    wc = fm.width - t + 1
    orders = np.empty((hc * wc, fm.channels, t * t), dtype=np.int64)
    vals = np.empty_like(orders, dtype=np.float64)
    centers = all_patch_centers(fm, cfg)
    for i, (x, y) in enumerate(centers):
        o, v = sort_patch(patch_window(fm, (x, y), cfg))
        orders[i] = o
        vals[i] = v
    return centers, orders, vals


def _pairwise_costs(fm, cfg, comparator):
    """Cost matrix (P, P) of the comparator's per-patch cost for all pairs."""
    t = cfg.patch_size
    if comparator == "moments":
        k = backend.kernels()
        means = k.patch_means(fm.data, t).reshape(-1, fm.channels)
        centers = all_patch_centers(fm, cfg)
        diff = means[:, None, :] - means[None, :, :]
        return centers, (diff ** 2).sum(axis=2)
    if comparator == "histogram":
        _check_unit_range(fm)
        b = cfg.histogram_bins
        centers = all_patch_centers(fm, cfg)
        cdfs = np.empty((len(centers), fm.channels, b))
        for i, (x, y) in enumerate(centers):
            cdfs[i] = np.cumsum(patch_histogram_reference(fm, (x, y), cfg, b), axis=1)
        cost = np.abs(cdfs[:, None] - cdfs[None, :]).sum(axis=(2, 3)) / b
        return centers, cost
    if comparator in ("sww", "fca"):
        centers, orders, vals = _sorted_window_stack(fm, cfg)
        if comparator == "sww":
            # the comparator's own cost: sigma_w-weighted rank errors at the query
            wsel = _sww_weights(cfg).reshape(-1)[orders]  # (P, C, R), query-side weights
            cost = np.einsum("qcr,qpcr->qp",
                             wsel,
                             np.abs(vals[:, None] - vals[None, :]), optimize=True)
        else:
            # plain per-patch Wasserstein distance; FCA has no scalar per-patch
            # cost of its own, this is its unweighted total matching error
            cost = np.abs(vals[:, None] - vals[None, :]).sum(axis=(2, 3))
        return centers, cost
    raise InvalidParameter(f"unknown comparator {comparator!r}")


def _knn_select(centers, cost, k, excl_radius):
    """Indices of the k cheapest admissible candidates per query row.

    Ties resolve toward the lower raster index, so the selection does not
    depend on candidate enumeration order.
    """
    p = len(centers)
    cheb = np.maximum(np.abs(centers[:, None, 0] - centers[None, :, 0]),
                      np.abs(centers[:, None, 1] - centers[None, :, 1]))
    admissible = cheb > excl_radius
    n_adm = admissible.sum(axis=1)
    if n_adm.min() < k:
        raise InvalidParameter(
            f"k={k} nearest neighbors requested but only {n_adm.min()} admissible "
            f"candidates exist (self_exclusion_radius={excl_radius})")
    sel = np.empty((p, k), dtype=np.int64)
    idx = np.arange(p)
    for q in range(p):
        mask = admissible[q]
        cand = idx[mask]
        order = np.lexsort((cand, cost[q, mask]))
        sel[q] = cand[order[:k]]
    return sel


def knn_score(fm, cfg, spec, comparator):
    """Anomaly map where each patch is compared to its k nearest patches.

    Selection uses the comparator's per-patch cost over all candidates whose
    center is more than `self_exclusion_radius` away (Chebyshev); the score
    sums the k smallest costs. For FCA the k selected references contribute
    per-pixel exactly as in `fca_score`. Quadratic in the patch count, meant
    for low-resolution feature maps.
    """
    if spec.strategy != "knn":
        raise InvalidParameter(f"expected knn strategy, got {spec.strategy!r}")
    _check_patch(fm, cfg)
    excl = spec.self_exclusion_radius
    if excl is None:
        excl = cfg.patch_size
    centers, cost = _pairwise_costs(fm, cfg, comparator)
    sel = _knn_select(centers, cost, spec.count, excl)
    t = cfg.patch_size
    hc = fm.height - t + 1
    wc = fm.width - t + 1
    if comparator != "fca":
        scores = np.take_along_axis(cost, sel, axis=1).sum(axis=1)
        return AnomalyMap(_expand_to_full(scores.reshape(hc, wc), t, fm.height, fm.width))
    return _knn_fca_aggregate(fm, cfg, centers, sel)


def _knn_fca_aggregate(fm, cfg, centers, sel):
    # Scatter each patch's error maps against its k selected references,
    # weighting by the center-to-pixel Gaussian; per-pixel mass counts each
    # patch once so the result is the sum of k normalized contributions.
    t = cfg.patch_size
    half = cfg.half
    gp = gaussian_kernel(cfg.sigma_p, half).weights
    sm1 = smoothing_kernel_1d(cfg)
    smooth2d = np.outer(sm1, sm1) if sm1.size else None
    acc = np.zeros((fm.height, fm.width))
    mass = np.zeros((fm.height, fm.width))
    sorted_refs = {}
    for q, (x, y) in enumerate(centers):
        order, vals = sort_patch(patch_window(fm, (x, y), cfg))
        m = np.zeros(t * t)
        for j in sel[q]:
            jx, jy = centers[j]
            key = int(j)
            if key not in sorted_refs:
                sorted_refs[key] = sort_patch(patch_window(fm, (jx, jy), cfg))[1]
            diffs = np.abs(vals - sorted_refs[key])
            for ch in range(fm.channels):
                m[order[ch]] += diffs[ch]
        m = m.reshape(t, t)
        if smooth2d is not None:
            m = ndimage.convolve(m, smooth2d, mode="nearest")
        y0, x0 = y - half, x - half
        acc[y0:y0 + t, x0:x0 + t] += m * gp
        mass[y0:y0 + t, x0:x0 + t] += gp
    return AnomalyMap(acc / mass)
