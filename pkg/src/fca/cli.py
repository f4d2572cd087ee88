"""Command-line front end: localize, evaluate, bench, prepare-aitex.

Settings resolve in order: built-in defaults, then --preset, then --config
key=value file, then explicit flags. The resolved configuration is echoed
into a run manifest so any run can be reproduced byte-for-byte (given one
thread). Exit codes: 0 ok, 2 configuration error, 3 I/O or format error,
4 metric undefined, 1 unexpected failure.
"""

import argparse
import datetime
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import backend, bench
from .dataset import (
    discover_dataset,
    load_image,
    load_mask,
    prepare_aitex,
    read_fmap,
    write_fmap,
    write_heatmap_png,
)
from .errors import ConfigError, DatasetError, FormatError, InvalidParameter, MetricUndefined
from .features import KINDS, ExtractorSpec
from .grid import resize_bilinear
from .metrics import evaluate_split
from .pipeline import (
    COMPARATORS,
    PipelineConfig,
    PRESET_ALIASES,
    PRESETS,
    center_crop_masks,
    crop_border,
    localize,
    localize_features,
    preset,
)
from .refs import STRATEGIES, ReferenceSpec
from .stats import PatchConfig

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_METRIC = 4

# flat config-file / override keys -> how to parse them
_OPTION_PARSERS = {
    "extractor": str,
    "comparator": str,
    "reference": str,
    "patch-size": int,
    "sigma-p": float,
    "sigma-s": float,
    "sigma-w": float,
    "bins": int,
    "knn-k": int,
    "exclusion-radius": int,
    "seed": int,
    "resize": int,
    "crop-fraction": float,
    "orientations": int,
    "kernel-size": int,
    "channels": int,
    "allow-slow": lambda v: v.lower() in ("1", "true", "yes"),
    "uniform-sww": lambda v: v.lower() in ("1", "true", "yes"),
}

_REFERENCE_NAMES = {
    "global-mean": "global-mean",
    "global-hist": "global-hist",
    "global-histogram": "global-hist",
    "median-order": "median-order",
    "median": "median-order",
    "random-patches": "random-patches",
    "random": "random-patches",
    "knn": "knn",
    "all-patches": "all-patches",
    "all": "all-patches",
}


def parse_config_file(path):
    """Flat key=value lines; '#' starts a comment; unknown keys are errors."""
    options = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _OPTION_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            options[key] = _OPTION_PARSERS[key](value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}")
    return options


def _flag_options(args):
    mapping = {
        "extractor": args.extractor,
        "comparator": args.comparator,
        "reference": args.reference,
        "patch-size": args.patch_size,
        "sigma-p": args.sigma_p,
        "sigma-s": args.sigma_s,
        "sigma-w": args.sigma_w,
        "bins": args.bins,
        "knn-k": args.knn_k,
        "exclusion-radius": args.exclusion_radius,
        "seed": args.seed,
        "resize": args.resize,
        "crop-fraction": args.crop_fraction,
        "orientations": args.orientations,
        "kernel-size": args.kernel_size,
        "channels": args.channels,
    }
    options = {k: v for k, v in mapping.items() if v is not None}
    if args.allow_slow:
        options["allow-slow"] = True
    if getattr(args, "uniform_sww", False):
        options["uniform-sww"] = True
    return options


def resolve_config(args):
    """defaults <- preset <- config file <- flags, then build PipelineConfig."""
    base = preset(args.preset) if args.preset else PipelineConfig()
    options = {}
    if args.config:
        options.update(parse_config_file(args.config))
    options.update(_flag_options(args))

    patch = PatchConfig(
        patch_size=options.get("patch-size", base.patch.patch_size),
        sigma_w=options.get("sigma-w", base.patch.sigma_w),
        sigma_p=options.get("sigma-p", base.patch.sigma_p),
        sigma_s=options.get("sigma-s", base.patch.sigma_s),
        histogram_bins=options.get("bins", base.patch.histogram_bins),
        uniform_sww=options.get("uniform-sww", base.patch.uniform_sww),
    )
    ref_name = options.get("reference", base.reference.strategy)
    strategy = _REFERENCE_NAMES.get(ref_name)
    if strategy is None:
        raise ConfigError(f"unknown reference strategy {ref_name!r}; valid: {STRATEGIES}")
    reference = ReferenceSpec(
        strategy=strategy,
        count=options.get("knn-k", base.reference.count),
        seed=options.get("seed", base.reference.seed),
        self_exclusion_radius=options.get("exclusion-radius", base.reference.self_exclusion_radius),
        acknowledge_cost=options.get("allow-slow", base.reference.acknowledge_cost),
    )
    extractor = ExtractorSpec(
        kind=options.get("extractor", base.extractor.kind),
        kernel_size=options.get("kernel-size", base.extractor.kernel_size),
        channel_count=options.get("channels", base.extractor.channel_count),
        seed=options.get("seed", base.extractor.seed),
        orientations=options.get("orientations", base.extractor.orientations),
    )
    return PipelineConfig(
        extractor=extractor,
        patch=patch,
        reference=reference,
        comparator=options.get("comparator", base.comparator),
        resize_to=options.get("resize", base.resize_to),
        crop_fraction=options.get("crop-fraction", base.crop_fraction),
    )


def config_as_dict(config):
    return {
        "extractor": asdict(config.extractor),
        "patch": asdict(config.patch),
        "reference": asdict(config.reference),
        "comparator": config.comparator,
        "resize_to": config.resize_to,
        "crop_fraction": config.crop_fraction,
    }


def write_manifest(path, config, seed, out_dir, extra):
    manifest = {
        "config": config_as_dict(config),
        "seed": seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "output_dir": str(out_dir),
        "backend": backend.backend_name(),
    }
    manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n")


def _setup_threads(args):
    threads = args.threads if args.threads is not None else backend.threads_from_env()
    if threads is not None:
        backend.set_threads(threads)
    return threads


def cmd_localize(args):
    config = resolve_config(args)
    _setup_threads(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.features:
        fm = read_fmap(args.features)
        out_shape = (args.resize, args.resize) if args.resize else None
        am = localize_features(fm, config, out_shape)
        name = Path(args.features).stem
    else:
        if args.image is None:
            raise ConfigError("give an image path or --features")
        am = localize(load_image(args.image), config)
        name = Path(args.image).stem
    fmap_path = out_dir / f"{name}.fmap"
    png_path = out_dir / f"{name}.png"
    write_fmap(am.scores[:, :, np.newaxis], fmap_path)
    write_heatmap_png(am, png_path)
    cropped = crop_border(am.scores, config.crop_fraction)
    print(f"max_score={cropped.max():.6f}")
    write_manifest(out_dir / f"{name}.manifest.json", config, config.reference.seed, out_dir,
                   {"input": str(args.features or args.image),
                    "outputs": [str(fmap_path), str(png_path)]})
    return EXIT_OK


def _external_features_for(entry, dataset_root, features_root):
    rel = entry.image_path.relative_to(dataset_root).with_suffix(".fmap")
    path = Path(features_root) / rel
    if not path.is_file():
        raise DatasetError(f"missing exported features for {entry.image_path}: expected {path}")
    return read_fmap(path)


def cmd_evaluate(args):
    config = resolve_config(args)
    _setup_threads(args)
    index = discover_dataset(args.dataset, layout=args.layout)
    if len(index) == 0:
        raise DatasetError(f"no images found under {args.dataset} (layout {args.layout})")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_class = {}
    map_paths = []
    for cls in index.classes:
        cls_dir = out_dir / cls
        cls_dir.mkdir(exist_ok=True)
        maps, masks, labels = [], [], []
        for entry in index.entries[cls]:
            image = load_image(entry.image_path)
            if args.features_root:
                fm = _external_features_for(entry, index.root, args.features_root)
                if config.resize_to is not None:
                    out_shape = (config.resize_to, config.resize_to)
                else:
                    out_shape = image.shape[:2]
                am = localize_features(fm, config, out_shape)
            else:
                am = localize(image, config)
            if entry.mask_path is None:
                mask = np.zeros(am.shape, dtype=np.uint8)
            else:
                mask = load_mask(entry.mask_path)
                if mask.shape != am.shape:
                    mask = (resize_bilinear(mask.astype(float), *am.shape) >= 0.5).astype(np.uint8)
            am, mask = center_crop_masks(am, mask, config.crop_fraction)
            maps.append(am)
            masks.append(mask)
            labels.append(int(entry.defect_type != "good"))
            stem = entry.image_path.stem
            path = cls_dir / f"{entry.defect_type}_{stem}.fmap"
            write_fmap(am.scores[:, :, np.newaxis], path)
            write_heatmap_png(am, cls_dir / f"{entry.defect_type}_{stem}.png")
            map_paths.append(str(path))
        img_labels = labels if 0 < sum(labels) < len(labels) else None
        report = evaluate_split(maps, masks, image_labels=img_labels)
        per_class[cls] = report
        (cls_dir / "report.txt").write_text(report.as_text())
        (cls_dir / "report.json").write_text(report.as_json())
        print(f"[{cls}] " + " ".join(f"{k}={v:.4f}" for k, v in report.as_dict().items()))
    agg = {}
    for key in ("auroc", "pro_03", "f1_max", "image_auroc"):
        values = [getattr(r, key if key != "image_auroc" else "image_auroc")
                  for r in per_class.values()]
        values = [v for v in values if v is not None]
        if values:
            agg[key] = float(np.mean(values))
    lines = "".join(f"{k}={v:.6f}\n" for k, v in agg.items())
    (out_dir / "report.txt").write_text(lines)
    (out_dir / "report.json").write_text(json.dumps(agg, indent=2) + "\n")
    print("[mean] " + " ".join(f"{k}={v:.4f}" for k, v in agg.items()))
    write_manifest(out_dir / "manifest.json", config, config.reference.seed, out_dir,
                   {"dataset": str(args.dataset), "layout": args.layout,
                    "per_image_maps": map_paths,
                    "per_class": {c: r.as_dict() for c, r in per_class.items()},
                    "aggregate": agg})
    return EXIT_OK


def cmd_bench(args):
    threads = _setup_threads(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    methods = args.methods.split(",") if args.methods else list(bench.METHODS)
    backends = ("numba", "numpy") if args.compare_backends else None
    result = bench.run_bench(
        sizes, methods=methods, channels=args.channels or 2,
        patch_size=args.patch_size or 5, bins=args.bins or 10,
        repetitions=args.repetitions, seed=args.seed or 0,
        backends=backends, threads=threads)
    table = bench.format_table(result)
    print(table, end="")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "bench.txt").write_text(table)
        (out_dir / "bench.csv").write_text(bench.format_csv(result))
    return EXIT_OK


def cmd_prepare_aitex(args):
    n = prepare_aitex(args.src, args.out, frame_size=args.frame_size,
                      resize_to=args.resize or 320, valid_margin=args.valid_margin)
    print(f"wrote {n} frames to {args.out}")
    return EXIT_OK


def _add_config_flags(p):
    p.add_argument("--preset", choices=sorted(set(PRESETS) | set(PRESET_ALIASES)))
    p.add_argument("--config", help="flat key=value settings file")
    p.add_argument("--extractor", choices=[k for k in KINDS if k != "external"])
    p.add_argument("--comparator", choices=COMPARATORS)
    p.add_argument("--reference", choices=sorted(_REFERENCE_NAMES))
    p.add_argument("--patch-size", type=int)
    p.add_argument("--sigma-p", type=float)
    p.add_argument("--sigma-s", type=float)
    p.add_argument("--sigma-w", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--knn-k", type=int)
    p.add_argument("--exclusion-radius", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resize", type=int)
    p.add_argument("--crop-fraction", type=float)
    p.add_argument("--orientations", type=int)
    p.add_argument("--kernel-size", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--allow-slow", action="store_true",
                   help="opt into the quadratic all-patches reference")
    p.add_argument("--uniform-sww", action="store_true")
    p.add_argument("--threads", type=int, help="worker threads (or FCA_NUM_THREADS)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fca", description="zero-shot texture anomaly localization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("localize", help="score one image or feature file")
    p.add_argument("image", nargs="?", help="input image (PNG)")
    p.add_argument("--features", help="pre-extracted FMAP file (skips extraction)")
    p.add_argument("--out", default="out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("evaluate", help="run a dataset split and report metrics")
    p.add_argument("dataset")
    p.add_argument("--layout", choices=("mvtec", "flat"), default="mvtec")
    p.add_argument("--features-root",
                   help="directory of exported FMAP files mirroring the dataset tree "
                        "(skips in-process extraction)")
    p.add_argument("--out", default="out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time comparators on synthetic grids")
    p.add_argument("--sizes", default="128,256,512", help="comma-separated square sides")
    p.add_argument("--methods", help="comma-separated subset of comparators")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--compare-backends", action="store_true",
                   help="time both the compiled and pure-numpy kernels")
    p.add_argument("--patch-size", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("prepare-aitex", help="cut fabric strips into flat-layout frames")
    p.add_argument("src")
    p.add_argument("out")
    p.add_argument("--frame-size", type=int, default=256)
    p.add_argument("--resize", type=int, default=320)
    p.add_argument("--valid-margin", type=int, default=0)
    p.set_defaults(func=cmd_prepare_aitex)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidParameter as err:
        print(f"invalid parameter: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, DatasetError, OSError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except MetricUndefined as err:
        print(f"metric undefined: {err}", file=sys.stderr)
        return EXIT_METRIC


if __name__ == "__main__":
    sys.exit(main())
