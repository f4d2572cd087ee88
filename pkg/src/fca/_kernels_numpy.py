"""Pure-numpy implementations of the hot sliding-window kernels.

These are the fallback path used when numba is unavailable or disabled via
FCA_BACKEND=numpy. They must compute exactly the same quantities as the
numba twins in `_kernels_numba.py` (floating-point summation order may
differ). Center-row bands are processed in chunks to bound memory.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage, signal

# Rough cap on the size of the (rows, Wc, T*T) window buffers.
_CHUNK_BUDGET = 4_000_000


def _chunk_rows(wc, r):
    return max(1, int(_CHUNK_BUDGET / max(1, wc * r)))


def _box_sums(img, t):
    """Sliding t x t window sums at all fully-inside positions."""
    h, w = img.shape
    cs = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(img, axis=0, out=cs[1:, 1:])
    np.cumsum(cs[1:, 1:], axis=1, out=cs[1:, 1:])
    return cs[t:, t:] - cs[:-t, t:] - cs[t:, :-t] + cs[:-t, :-t]


def patch_means(f, t):
    """Per-channel sliding means -> (Hc, Wc, C)."""
    h, w, c = f.shape
    out = np.empty((h - t + 1, w - t + 1, c), dtype=np.float64)
    for ch in range(c):
        out[:, :, ch] = _box_sums(f[:, :, ch], t) / float(t * t)
    return out


def hist_emd(f, ref_cdf, t):
    """Per-center EMD between the patch histogram and a reference CDF.

    `f` must already lie in [0, 1]; `ref_cdf` has shape (C, B). Uses the
    CDF-difference form of the 1-D Wasserstein distance with bin width 1/B.
    """
    h, w, c = f.shape
    b = ref_cdf.shape[1]
    r = t * t
    bins = np.minimum((f * b).astype(np.int64), b - 1)
    out = np.zeros((h - t + 1, w - t + 1), dtype=np.float64)
    for ch in range(c):
        cdf = np.zeros_like(out)
        acc = np.zeros_like(out)
        for bi in range(b - 1):  # last CDF column is 1 on both sides
            cdf += _box_sums((bins[:, :, ch] == bi).astype(np.float64), t) / r
            acc += np.abs(cdf - ref_cdf[ch, bi])
        out += acc / b
    return out


def _sorted_windows(channel, t):
    """Stable-sorted raster windows -> (rows, Wc, R) order and values."""
    win = sliding_window_view(channel, (t, t)).reshape(channel.shape[0] - t + 1,
                                                       channel.shape[1] - t + 1, t * t)
    order = np.argsort(win, axis=-1, kind="stable")
    vals = np.take_along_axis(win, order, axis=-1)
    return order, vals


def sww(f, ref, t, weights):
    """Gaussian-weighted rank-matching score at each patch center -> (Hc, Wc).

    `ref` is the (C, T*T) sorted reference; `weights` the (T, T) in-patch
    weighting, normalized to sum 1.
    """
    h, w, c = f.shape
    hc, wc = h - t + 1, w - t + 1
    wflat = weights.reshape(-1)
    out = np.zeros((hc, wc), dtype=np.float64)
    step = _chunk_rows(wc, t * t)
    for y0 in range(0, hc, step):
        y1 = min(hc, y0 + step)
        band = np.zeros((y1 - y0, wc), dtype=np.float64)
        for ch in range(c):
            order, vals = _sorted_windows(f[y0:y1 + t - 1, :, ch], t)
            band += (np.abs(vals - ref[ch]) * wflat[order]).sum(axis=-1)
        out[y0:y1] = band
    return out


def fca(f, ref, t, gp, smooth1d):
    """Aggregate per-pixel rank-matching errors over all covering patches.

    Every fully-inside patch distributes its (optionally smoothed) error map
    into the pixels it covers, weighted by the center-to-pixel Gaussian `gp`
    (T x T); each pixel is finally normalized by its accumulated weight mass.
    `smooth1d` is the 1-D separable smoothing kernel, or an empty array to
    skip smoothing.
    """
    h, w, c = f.shape
    hc, wc = h - t + 1, w - t + 1
    r = t * t
    acc = np.zeros((h, w), dtype=np.float64)
    mass = signal.convolve2d(np.ones((hc, wc)), gp, mode="full")
    smooth2d = None
    if smooth1d.size:
        smooth2d = np.outer(smooth1d, smooth1d)[None, None]
    step = _chunk_rows(wc, r)
    for y0 in range(0, hc, step):
        y1 = min(hc, y0 + step)
        m = np.zeros((y1 - y0, wc, r), dtype=np.float64)
        for ch in range(c):
            order, vals = _sorted_windows(f[y0:y1 + t - 1, :, ch], t)
            contrib = np.zeros_like(m)
            np.put_along_axis(contrib, order, np.abs(vals - ref[ch]), axis=-1)
            m += contrib
        m = m.reshape(y1 - y0, wc, t, t)
        if smooth2d is not None:
            m = ndimage.convolve(m, smooth2d, mode="nearest")
        for py in range(t):
            row = m[:, :, py, :] * gp[py]
            for px in range(t):
                acc[y0 + py:y1 + py, px:px + wc] += row[:, :, px]
    return acc / mass


def rank_medians(f, t):
    """Median over all fully-inside patches of each sorted position -> (C, T*T)."""
    h, w, c = f.shape
    r = t * t
    out = np.empty((c, r), dtype=np.float64)
    for ch in range(c):
        win = sliding_window_view(f[:, :, ch], (t, t)).reshape(-1, r)
        out[ch] = np.median(np.sort(win, axis=1), axis=0)
    return out
