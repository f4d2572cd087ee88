"""Dataset discovery, PNG image/mask decoding, and the FMAP container.

FMAP is the little-endian binary carrier for H x W x C float grids shared
with the external feature exporter: magic "FMP1", three u32 dimensions
(height, width, channels), then H*W*C float32 values in row-major
(y, x, c) order. The layout is fixed regardless of host endianness.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import DatasetError, FormatError, InvalidParameter
from .grid import FeatureMap, resize_bilinear

FMAP_MAGIC = b"FMP1"
# Guard against absurd headers before allocating: total element count cap.
_MAX_ELEMENTS = 1 << 31


def write_fmap(fm, path):
    """Write a FeatureMap (or (H, W[, C]) array) to `path` in FMAP format."""
    arr = fm.data if isinstance(fm, FeatureMap) else np.asarray(fm, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise InvalidParameter(f"expected an (H, W, C) array, got shape {arr.shape}")
    h, w, c = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(FMAP_MAGIC)
        fh.write(struct.pack("<III", h, w, c))
        fh.write(payload)


def read_fmap(path):
    """Read an FMAP file back into a FeatureMap, validating the header."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != FMAP_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {FMAP_MAGIC!r}", offset=0)
    if len(raw) < 16:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    h, w, c = struct.unpack("<III", raw[4:16])
    if h < 1 or w < 1 or c < 1:
        raise FormatError(f"{path}: dimensions must be >= 1, got {h}x{w}x{c}", offset=4)
    n = h * w * c
    if n > _MAX_ELEMENTS:
        raise FormatError(f"{path}: {h}x{w}x{c} overflows the addressable size", offset=4)
    expected = 16 + 4 * n
    if len(raw) < expected:
        raise FormatError(
            f"{path}: payload holds {(len(raw) - 16) // 4} of {n} values", offset=len(raw))
    if len(raw) > expected:
        raise FormatError(f"{path}: {len(raw) - expected} trailing bytes", offset=expected)
    data = np.frombuffer(raw, dtype="<f4", count=n, offset=16).reshape(h, w, c)
    return FeatureMap(data.astype(np.float64))


def load_image(path):
    """Decode a PNG/the usual formats to (H, W, 3) float64 RGB in [0, 1]."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        arr = np.asarray(rgb, dtype=np.uint8)
    return arr.astype(np.float64) / 255.0


def load_mask(path):
    """Decode a ground-truth mask: any nonzero pixel counts as anomalous."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return (arr != 0).astype(np.uint8)


def write_heatmap_png(am, path, vmin=None, vmax=None):
    """Render an anomaly map as an 8-bit PNG, white-to-red, min-max scaled.

    vmin/vmax override the scaling scope (e.g. fixed per class); by default
    the map's own range is used.
    """
    scores = am.scores
    lo = scores.min() if vmin is None else float(vmin)
    hi = scores.max() if vmax is None else float(vmax)
    span = hi - lo
    t = np.zeros_like(scores) if span <= 0 else np.clip((scores - lo) / span, 0.0, 1.0)
    rgb = np.empty(scores.shape + (3,), dtype=np.uint8)
    rgb[:, :, 0] = np.round(255 * (1.0 - 0.6 * t))
    rgb[:, :, 1] = np.round(255 * (1.0 - t))
    rgb[:, :, 2] = np.round(255 * (1.0 - t))
    Image.fromarray(rgb, mode="RGB").save(path)


@dataclass(frozen=True)
class ImageEntry:
    image_path: Path
    mask_path: Optional[Path]  # None for defect-free images
    defect_type: str


@dataclass
class DatasetIndex:
    root: Path
    classes: list = field(default_factory=list)
    entries: dict = field(default_factory=dict)  # class name -> [ImageEntry]

    def __len__(self):
        return sum(len(v) for v in self.entries.values())


def _discover_mvtec(root):
    index = DatasetIndex(root=root)
    for class_dir in sorted(p for p in root.iterdir() if (p / "test").is_dir()):
        entries = []
        test_dir = class_dir / "test"
        for defect_dir in sorted(p for p in test_dir.iterdir() if p.is_dir()):
            defect = defect_dir.name
            for img in sorted(defect_dir.glob("*.png")):
                if defect == "good":
                    entries.append(ImageEntry(img, None, defect))
                    continue
                mask = class_dir / "ground_truth" / defect / f"{img.stem}_mask.png"
                if not mask.is_file():
                    raise DatasetError(f"missing ground-truth mask for {img}: expected {mask}")
                entries.append(ImageEntry(img, mask, defect))
        if entries:
            index.classes.append(class_dir.name)
            index.entries[class_dir.name] = entries
    return index


def _discover_flat(root):
    index = DatasetIndex(root=root)
    entries = []
    for img in sorted(root.glob("*.png")):
        if img.stem.endswith("_mask"):
            continue
        mask = img.with_name(f"{img.stem}_mask.png")
        entries.append(ImageEntry(img, mask if mask.is_file() else None,
                                  "defect" if mask.is_file() else "good"))
    if entries:
        index.classes.append(root.name)
        index.entries[root.name] = entries
    return index


def discover_dataset(root, layout="mvtec"):
    """Index a dataset directory.

    mvtec layout: `<class>/test/<defect>/<id>.png` with masks at
    `<class>/ground_truth/<defect>/<id>_mask.png`; images under `test/good`
    have no mask. flat layout: sibling `x.png` / `x_mask.png` pairs, a
    missing mask meaning defect-free. Ordering is lexicographic by path, so
    indices are stable across platforms.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist")
    if layout == "mvtec":
        return _discover_mvtec(root)
    if layout == "flat":
        return _discover_flat(root)
    raise InvalidParameter(f"layout must be 'mvtec' or 'flat', got {layout!r}")


def prepare_aitex(src_dir, out_dir, frame_size=256, resize_to=320, valid_margin=0):
    """Cut wide fabric strips into square frames for flat-layout evaluation.

    Frames must lie fully inside [valid_margin, width - valid_margin) and
    contain at least one defective pixel; kept frames and masks are resized
    to `resize_to` squared. Returns the number of frames written.
    """
    src = Path(src_dir)
    out = Path(out_dir)
    if not src.is_dir():
        raise DatasetError(f"source directory {src} does not exist")
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for img_path in sorted(src.glob("*.png")):
        if img_path.stem.endswith("_mask"):
            continue
        mask_path = img_path.with_name(f"{img_path.stem}_mask.png")
        if not mask_path.is_file():
            raise DatasetError(f"missing mask for {img_path}: expected {mask_path}")
        image = load_image(img_path)
        mask = load_mask(mask_path)
        if image.shape[:2] != mask.shape:
            raise DatasetError(f"{img_path}: image {image.shape[:2]} vs mask {mask.shape}")
        h, w = mask.shape
        if frame_size > h:
            raise DatasetError(f"{img_path}: strip height {h} below frame size {frame_size}")
        for i, x0 in enumerate(range(0, w - frame_size + 1, frame_size)):
            if x0 < valid_margin or x0 + frame_size > w - valid_margin:
                continue  # frame touches the uncovered strip border
            sub_img = image[:frame_size, x0:x0 + frame_size]
            sub_mask = mask[:frame_size, x0:x0 + frame_size]
            if not sub_mask.any():
                continue  # defect-free frames are dropped
            img_out = resize_bilinear(sub_img, resize_to, resize_to)
            mask_out = resize_bilinear(sub_mask.astype(np.float64), resize_to, resize_to) >= 0.5
            name = f"{img_path.stem}_f{i:02d}"
            Image.fromarray(np.round(img_out * 255).astype(np.uint8)).save(out / f"{name}.png")
            Image.fromarray((mask_out * 255).astype(np.uint8)).save(out / f"{name}_mask.png")
            written += 1
    return written
