"""Numba-compiled twins of the sliding-window kernels in `_kernels_numpy.py`.

Parallelism is over independent rows/centers only; the patch-aggregation
kernel gathers finished output rows from a circular band buffer instead of
scattering with atomics, so results do not depend on the thread count.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def patch_means(f, t):
    h, w, c = f.shape
    hc = h - t + 1
    wc = w - t + 1
    out = np.empty((hc, wc, c))
    area = float(t * t)
    for i in prange(hc):
        cols = np.empty(w)
        for ch in range(c):
            for x in range(w):
                s = 0.0
                for dy in range(t):
                    s += f[i + dy, x, ch]
                cols[x] = s
            s = 0.0
            for x in range(t):
                s += cols[x]
            out[i, 0, ch] = s / area
            for j in range(1, wc):
                s += cols[j + t - 1] - cols[j - 1]
                out[i, j, ch] = s / area
    return out


@njit(cache=True, parallel=True)
def hist_emd(f, ref_cdf, t):
    h, w, c = f.shape
    b = ref_cdf.shape[1]
    hc = h - t + 1
    wc = w - t + 1
    r = float(t * t)
    out = np.empty((hc, wc))
    for i in prange(hc):
        counts = np.zeros((c, b), dtype=np.int64)
        for ch in range(c):
            for dy in range(t):
                for dx in range(t):
                    bi = int(f[i + dy, dx, ch] * b)
                    if bi > b - 1:
                        bi = b - 1
                    counts[ch, bi] += 1
        for j in range(wc):
            if j > 0:  # slide the window histogram one column right
                for ch in range(c):
                    for dy in range(t):
                        bi = int(f[i + dy, j - 1, ch] * b)
                        if bi > b - 1:
                            bi = b - 1
                        counts[ch, bi] -= 1
                        bi = int(f[i + dy, j + t - 1, ch] * b)
                        if bi > b - 1:
                            bi = b - 1
                        counts[ch, bi] += 1
            total = 0.0
            for ch in range(c):
                cdf = 0.0
                acc = 0.0
                for bi in range(b - 1):
                    cdf += counts[ch, bi] / r
                    acc += abs(cdf - ref_cdf[ch, bi])
                total += acc / b
            out[i, j] = total
    return out


@njit(cache=True, parallel=True)
def sww(f, ref, t, weights):
    h, w, c = f.shape
    hc = h - t + 1
    wc = w - t + 1
    r = t * t
    wflat = weights.reshape(r)
    out = np.empty((hc, wc))
    for i in prange(hc):
        vals = np.empty(r)
        for j in range(wc):
            s = 0.0
            for ch in range(c):
                k = 0
                for dy in range(t):
                    for dx in range(t):
                        vals[k] = f[i + dy, j + dx, ch]
                        k += 1
                order = np.argsort(vals, kind="mergesort")
                for rr in range(r):
                    p = order[rr]
                    s += abs(vals[p] - ref[ch, rr]) * wflat[p]
            out[i, j] = s
    return out


@njit(cache=True, parallel=True)
def fca(f, ref, t, gp, smooth1d):
    h, w, c = f.shape
    hc = h - t + 1
    wc = w - t + 1
    r = t * t
    ks = smooth1d.shape[0]
    pad = ks // 2
    acc = np.empty((h, w))
    buf = np.empty((t, wc, t, t))  # smoothed error maps of the last T center rows
    for ic in range(hc):
        row = ic % t
        for jc in prange(wc):
            vals = np.empty(r)
            m = np.zeros((t, t))
            for ch in range(c):
                k = 0
                for dy in range(t):
                    for dx in range(t):
                        vals[k] = f[ic + dy, jc + dx, ch]
                        k += 1
                order = np.argsort(vals, kind="mergesort")
                for rr in range(r):
                    p = order[rr]
                    m[p // t, p % t] += abs(vals[p] - ref[ch, rr])
            if ks > 0:
                # separable smoothing with edge replication inside the patch
                padded = np.empty((t + 2 * pad, t + 2 * pad))
                for yy in range(t + 2 * pad):
                    sy = min(max(yy - pad, 0), t - 1)
                    for xx in range(t + 2 * pad):
                        sx = min(max(xx - pad, 0), t - 1)
                        padded[yy, xx] = m[sy, sx]
                tmp = np.empty((t, t + 2 * pad))
                for yy in range(t):
                    for xx in range(t + 2 * pad):
                        s = 0.0
                        for kk in range(ks):
                            s += padded[yy + kk, xx] * smooth1d[kk]
                        tmp[yy, xx] = s
                for yy in range(t):
                    for xx in range(t):
                        s = 0.0
                        for kk in range(ks):
                            s += tmp[yy, xx + kk] * smooth1d[kk]
                        m[yy, xx] = s
            buf[row, jc] = m
        y_hi = ic if ic < hc - 1 else h - 1
        for y in range(ic, y_hi + 1):
            ic_lo = max(0, y - t + 1)
            ic_hi = min(hc - 1, y)
            for x in prange(w):
                a = 0.0
                ms = 0.0
                for ic2 in range(ic_lo, ic_hi + 1):
                    py = y - ic2
                    jc_lo = max(0, x - t + 1)
                    jc_hi = min(wc - 1, x)
                    for jc2 in range(jc_lo, jc_hi + 1):
                        g = gp[py, x - jc2]
                        a += buf[ic2 % t, jc2, py, x - jc2] * g
                        ms += g
                acc[y, x] = a / ms
    return acc


@njit(cache=True, parallel=True)
def rank_medians(f, t):
    h, w, c = f.shape
    hc = h - t + 1
    wc = w - t + 1
    r = t * t
    n = hc * wc
    out = np.empty((c, r))
    for ch in range(c):
        mat = np.empty((n, r))
        for idx in prange(n):
            i = idx // wc
            j = idx % wc
            vals = np.empty(r)
            k = 0
            for dy in range(t):
                for dx in range(t):
                    vals[k] = f[i + dy, j + dx, ch]
                    k += 1
            vals.sort()
            mat[idx] = vals
        for rr in prange(r):
            out[ch, rr] = np.median(mat[:, rr].copy())
    return out
