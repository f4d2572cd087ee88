"""Classic feature extractors and ingestion of externally computed features.

All extractors preserve the input's spatial resolution (border responses
are filled by edge replication) and are deterministic given their spec.
Channel counts: colors 3, random projections spec.channel_count, steerable
2 x orientations (even/odd quadrature pair per angle), Laws energy 25.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage, signal

from .errors import InvalidParameter
from .grid import FeatureMap

KINDS = ("colors", "random", "steerable", "laws", "external")

# ITU-R BT.601 luminance weights.
_LUMA = np.array([0.299, 0.587, 0.114])

# Laws' 1-D texture vectors: level, edge, spot, wave, ripple.
LAWS_VECTORS = {
    "L5": np.array([1.0, 4.0, 6.0, 4.0, 1.0]),
    "E5": np.array([-1.0, -2.0, 0.0, 2.0, 1.0]),
    "S5": np.array([-1.0, 0.0, 2.0, 0.0, -1.0]),
    "W5": np.array([-1.0, 2.0, 0.0, -2.0, 1.0]),
    "R5": np.array([1.0, -4.0, 6.0, -4.0, 1.0]),
}
LAWS_ORDER = ("L5", "E5", "S5", "W5", "R5")
LAWS_ENERGY_WINDOW = 15


@dataclass(frozen=True)
class ExtractorSpec:
    """Which extractor to run and its parameters.

    kernel_size/seed apply to random projections, orientations to the
    steerable bank, external_path to pre-computed feature files.
    """

    kind: str = "colors"
    kernel_size: int = 5
    channel_count: int = 128
    seed: int = 0
    orientations: int = 16
    external_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameter(f"extractor kind must be one of {KINDS}, got {self.kind!r}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidParameter(f"kernel_size must be odd, got {self.kernel_size}")
        if self.channel_count < 1:
            raise InvalidParameter(f"channel_count must be >= 1, got {self.channel_count}")
        if self.orientations < 1:
            raise InvalidParameter(f"orientations must be >= 1, got {self.orientations}")


def as_rgb01(image):
    """Coerce an image array to (H, W, 3) float64 in [0, 1]."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidParameter(f"expected an RGB or grayscale image, got shape {arr.shape}")
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    arr = arr.astype(np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise InvalidParameter("float images must be scaled to [0, 1]")
    return arr


def luminance(image):
    return as_rgb01(image) @ _LUMA


def extract_colors(image):
    """Identity features: the per-channel intensities in [0, 1]."""
    return FeatureMap(as_rgb01(image))


def random_projection_kernels(spec):
    """The bank of zero-mean, unit-Frobenius-norm random kernels (N, k, k, 3)."""
    rng = np.random.default_rng(spec.seed)
    k = rng.standard_normal((spec.channel_count, spec.kernel_size, spec.kernel_size, 3))
    k -= k.mean(axis=(1, 2, 3), keepdims=True)
    k /= np.linalg.norm(k.reshape(spec.channel_count, -1), axis=1)[:, None, None, None]
    return k

def extract_random_projections(image, spec):
    """Sliding-window projection of the image onto random kernels (an impulse
    therefore reproduces the spatially flipped kernel). Zero-mean kernels
    make the responses invariant to brightness offsets; constants map to
    zero.
    """
    if spec.kind != "random":
        raise InvalidParameter(f"expected a random-projection spec, got kind {spec.kind!r}")
    img = as_rgb01(image)
    h, w, _ = img.shape
    if h < spec.kernel_size or w < spec.kernel_size:
        raise InvalidParameter(
            f"image {h}x{w} is smaller than the {spec.kernel_size}x{spec.kernel_size} kernel")
    kernels = random_projection_kernels(spec)
    n = spec.channel_count
    out = np.zeros((n, h - spec.kernel_size + 1, w - spec.kernel_size + 1))
    for c in range(3):
        out += signal.fftconvolve(
            np.broadcast_to(img[:, :, c], (n, h, w)),
            kernels[:, ::-1, ::-1, c], mode="valid", axes=(1, 2))
    pad = spec.kernel_size // 2
    full = np.pad(out, ((0, 0), (pad, pad), (pad, pad)), mode="edge")
    return FeatureMap(np.moveaxis(full, 0, 2))


def _steerable_bases(radius=4, spacing=0.5):
    """Sampled second-derivative-of-Gaussian basis and its quadrature pair.

    Returns (g_bases, h_bases): 3 even and 4 odd basis kernels. Each sampled
    kernel is zero-meaned so constant inputs respond exactly zero.
    """
    d = np.arange(-radius, radius + 1, dtype=np.float64) * spacing
    x = d[None, :]
    y = d[:, None]
    env = np.exp(-(x ** 2 + y ** 2))
    g = np.stack([
        0.9213 * (2 * x ** 2 - 1) * env,
        1.843 * x * y * env,
        0.9213 * (2 * y ** 2 - 1) * env,
    ])
    h = np.stack([
        0.9780 * (-2.254 * x + x ** 3) * env,
        0.9780 * (-0.7515 + x ** 2) * y * env,
        0.9780 * (-0.7515 + y ** 2) * x * env,
        0.9780 * (-2.254 * y + y ** 3) * env,
    ])
    g -= g.mean(axis=(1, 2), keepdims=True)
    h -= h.mean(axis=(1, 2), keepdims=True)
    return g, h


def steerable_kernels(orientations):
    """Even and odd oriented kernels at angles j*pi/K, shapes (K, s, s)."""
    g, h = _steerable_bases()
    thetas = np.arange(orientations) * np.pi / orientations
    ct, st = np.cos(thetas), np.sin(thetas)
    even = (ct ** 2)[:, None, None] * g[0] \
        - (2 * ct * st)[:, None, None] * g[1] \
        + (st ** 2)[:, None, None] * g[2]
    odd = (ct ** 3)[:, None, None] * h[0] \
        - (3 * ct ** 2 * st)[:, None, None] * h[1] \
        + (3 * ct * st ** 2)[:, None, None] * h[2] \
        - (st ** 3)[:, None, None] * h[3]
    return even, odd


def extract_steerable(image, orientations=16):
    """Oriented quadrature-pair responses of the luminance at K angles.

    Channel layout: K even responses then K odd responses (filters applied
    as templates, edge-replicated borders).
    """
    lum = luminance(image)
    even, odd = steerable_kernels(orientations)
    channels = [ndimage.correlate(lum, k, mode="nearest") for k in even]
    channels += [ndimage.correlate(lum, k, mode="nearest") for k in odd]
    return FeatureMap(np.stack(channels, axis=2))


def laws_kernels():
    """The 25 outer-product kernels, row vector x column vector, fixed order."""
    out = []
    for a in LAWS_ORDER:
        for b in LAWS_ORDER:
            out.append(np.outer(LAWS_VECTORS[a], LAWS_VECTORS[b]))
    return np.stack(out)


def extract_laws_tem(image):
    """Laws texture energy: 25 kernel responses pooled by a 15x15 mean of
    absolute values. All kernels except L5L5 are zero-sum, so constants
    respond zero there.
    """
    lum = luminance(image)
    channels = []
    for k in laws_kernels():
        resp = ndimage.correlate(lum, k, mode="nearest")
        channels.append(ndimage.uniform_filter(np.abs(resp), size=LAWS_ENERGY_WINDOW,
                                               mode="nearest"))
    return FeatureMap(np.stack(channels, axis=2))


def load_external_features(path):
    """Read a feature map exported in the FMAP container format."""
    from .dataset import read_fmap
    return read_fmap(path)


def extract(image, spec):
    """Dispatch to the extractor named by `spec.kind`."""
    if spec.kind == "colors":
        return extract_colors(image)
    if spec.kind == "random":
        return extract_random_projections(image, spec)
    if spec.kind == "steerable":
        return extract_steerable(image, spec.orientations)
    if spec.kind == "laws":
        return extract_laws_tem(image)
    if spec.kind == "external":
        if spec.external_path is None:
            raise InvalidParameter("external extractor needs external_path")
        return load_external_features(spec.external_path)
    raise InvalidParameter(f"unknown extractor kind {spec.kind!r}")


def channel_count(spec):
    """Channels the extractor will produce (None for external: file decides)."""
    if spec.kind == "colors":
        return 3
    if spec.kind == "random":
        return spec.channel_count
    if spec.kind == "steerable":
        return 2 * spec.orientations
    if spec.kind == "laws":
        return 25
    return None
