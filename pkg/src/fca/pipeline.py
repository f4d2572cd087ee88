"""End-to-end assembly: preprocess, extract, normalize, reference, score.

A run is: optionally resize the image, extract features, rescale channels
to [0, 1], build the reference(s) for the configured strategy, sum the
comparator's score maps over the references, and upsample back to image
resolution when the features are coarser (externally exported deep
features have a stride). Reference strategies and comparators only pair
where the reference type matches what the comparator consumes.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import features as feats
from . import refs as refs_mod
from . import stats
from .errors import ConfigError, InvalidParameter
from .features import ExtractorSpec
from .grid import AnomalyMap, FeatureMap, normalize_channels, resize_bilinear, upsample_bilinear
from .refs import ReferenceSpec
from .stats import PatchConfig

COMPARATORS = ("moments", "histogram", "sww", "fca")

# strategy -> comparators it can feed
_COMPATIBLE = {
    "global-mean": ("moments",),
    "global-hist": ("histogram",),
    "median-order": ("sww", "fca"),
    "random-patches": COMPARATORS,
    "knn": COMPARATORS,
    "all-patches": COMPARATORS,
}


@dataclass(frozen=True)
class PipelineConfig:
    extractor: ExtractorSpec = field(default_factory=ExtractorSpec)
    patch: PatchConfig = field(default_factory=PatchConfig)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    comparator: str = "fca"
    resize_to: Optional[int] = None
    crop_fraction: float = 0.1

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ConfigError(f"comparator must be one of {COMPARATORS}, got {self.comparator!r}")
        if self.comparator not in _COMPATIBLE[self.reference.strategy]:
            raise ConfigError(
                f"reference strategy {self.reference.strategy!r} cannot feed the "
                f"{self.comparator!r} comparator (valid: {_COMPATIBLE[self.reference.strategy]})")
        if self.reference.strategy == "all-patches" and not self.reference.acknowledge_cost:
            raise ConfigError(
                "all-patches compares every patch pair and is quadratic in the pixel "
                "count; set acknowledge_cost=True (CLI: --allow-slow) to run it anyway")
        if not (0.0 <= self.crop_fraction < 0.5):
            raise ConfigError(f"crop_fraction must be in [0, 0.5), got {self.crop_fraction}")
        if self.resize_to is not None and self.resize_to < self.patch.patch_size:
            raise ConfigError(
                f"resize_to={self.resize_to} is below the patch size {self.patch.patch_size}")


# Direct encodings of the published operating points.
PRESETS = {
    # classic-features study scale: 256 squared, large patches, heavier smoothing
    "prelim-256": PipelineConfig(
        patch=PatchConfig(patch_size=25, sigma_w=6.0, sigma_p=6.0, sigma_s=3.0),
        resize_to=256,
    ),
    # low-resolution operating point: 320 squared, small patches
    "lowres-320": PipelineConfig(
        patch=PatchConfig(patch_size=3, sigma_w=3.0, sigma_p=3.0, sigma_s=1.0),
        resize_to=320,
    ),
    # full-resolution deep features (stride-8 exports): patch size in feature pixels
    "fullres": PipelineConfig(
        patch=PatchConfig(patch_size=9, sigma_w=3.0, sigma_p=3.0, sigma_s=1.0),
        resize_to=None,
    ),
}
PRESET_ALIASES = {"fullres-fca": "fullres"}


def preset(name):
    """A copy of the named preset config (aliases accepted)."""
    key = PRESET_ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return PRESETS[key]


def build_references(fm, config):
    """The reference list the comparator will sum over, per the strategy."""
    strategy = config.reference.strategy
    cfg = config.patch
    comparator = config.comparator
    if strategy == "global-mean":
        return [refs_mod.global_mean_reference(fm)]
    if strategy == "global-hist":
        return [refs_mod.global_histogram_reference(fm, cfg.histogram_bins)]
    if strategy == "median-order":
        return [refs_mod.median_order_statistics_reference(fm, cfg)]
    if strategy in ("random-patches", "all-patches"):
        if strategy == "random-patches":
            centers = refs_mod.random_patch_centers(fm, cfg, config.reference)
        else:
            centers = refs_mod.all_patch_centers(fm, cfg)
        if comparator == "moments":
            return [refs_mod.patch_mean_reference(fm, (x, y), cfg) for x, y in centers]
        if comparator == "histogram":
            return [refs_mod.patch_histogram_reference(fm, (x, y), cfg, cfg.histogram_bins)
                    for x, y in centers]
        return [refs_mod.patch_sorted_reference(fm, (x, y), cfg) for x, y in centers]
    raise ConfigError(f"strategy {strategy!r} does not produce a reference list")


def score_with_references(fm, references, comparator, cfg):
    """Sum of the comparator's score maps over a reference list."""
    score = stats.SCORE_FUNCTIONS[comparator]
    total = None
    for ref in references:
        out = score(fm, ref, cfg).scores
        total = out if total is None else total + out
    if total is None:
        raise InvalidParameter("reference list is empty")
    return AnomalyMap(total)


def score_features(fm, config, skip_normalize=False):
    """Score an already-extracted feature map at feature resolution."""
    if not skip_normalize:
        fm = normalize_channels(fm)
    if config.reference.strategy == "knn":
        excl = config.reference.self_exclusion_radius
        spec = config.reference if excl is not None else replace(
            config.reference, self_exclusion_radius=config.patch.patch_size)
        return refs_mod.knn_score(fm, config.patch, spec, config.comparator)
    references = build_references(fm, config)
    return score_with_references(fm, references, config.comparator, config.patch)


def localize(image, config):
    """Full anomaly localization of one RGB image (H, W, 3 or uint8).

    Output dimensions equal the (resized) input image's; feature maps at a
    coarser resolution are upsampled bilinearly.
    """
    img = feats.as_rgb01(image)
    if config.resize_to is not None:
        img = np.clip(resize_bilinear(img, config.resize_to, config.resize_to), 0.0, 1.0)
    fm = feats.extract(img, config.extractor)
    am = score_features(fm, config)
    if am.shape != img.shape[:2]:
        am = upsample_bilinear(am, img.shape[0], img.shape[1])
    return am


def localize_features(fm, config, out_shape=None):
    """Score a pre-extracted feature map; optionally upsample to out_shape."""
    am = score_features(fm, config)
    if out_shape is not None and tuple(out_shape) != am.shape:
        am = upsample_bilinear(am, out_shape[0], out_shape[1])
    return am


def crop_border(arr, crop_fraction):
    """Drop a border band of floor(crop_fraction * min(H, W)) pixels per side."""
    if not (0.0 <= crop_fraction < 0.5):
        raise InvalidParameter(f"crop_fraction must be in [0, 0.5), got {crop_fraction}")
    h, w = arr.shape[:2]
    band = int(crop_fraction * min(h, w))
    if band == 0:
        return arr
    if h - 2 * band < 1 or w - 2 * band < 1:
        raise InvalidParameter(f"crop fraction {crop_fraction} empties a {h}x{w} map")
    return arr[band:h - band, band:w - band]


def center_crop_masks(am, gt, crop_fraction):
    """Crop the same border band off a score map and its ground-truth mask."""
    gt = np.asarray(gt)
    if am.shape != gt.shape:
        raise InvalidParameter(f"score map {am.shape} vs mask {gt.shape}")
    return AnomalyMap(crop_border(am.scores, crop_fraction)), crop_border(gt, crop_fraction)
