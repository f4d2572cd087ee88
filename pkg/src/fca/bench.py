"""Timing harness: synthetic workloads, wall-clock medians, scaling fits.

Runs each comparator on deterministic synthetic feature maps across a grid
of sizes, optionally on both kernel backends, and fits the log-log slope of
time versus pixel count. A warm-up run per cell is discarded so jit
compilation never pollutes the numbers, and the timed call is exactly the
untimed scoring path.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import InvalidParameter
from .grid import FeatureMap
from .refs import global_histogram_reference, global_mean_reference, median_order_statistics_reference
from .stats import PatchConfig, fca_score, histogram_score, moments_score, sww_score

METHODS = ("moments", "histogram", "sww", "fca")


@dataclass(frozen=True)
class BenchRecord:
    method: str
    backend: str
    n_pixels: int
    patch_area: int
    channels: int
    bins: int
    seconds: float
    repetitions: int
    threads: int


@dataclass
class BenchResult:
    records: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)  # (method, backend) -> fitted exponent


def synthetic_features(side, channels, seed):
    rng = np.random.default_rng(seed)
    return FeatureMap(rng.random((side, side, channels)))


def _timed_score(method, fm, cfg):
    if method == "moments":
        ref = global_mean_reference(fm)
        fn = lambda: moments_score(fm, ref, cfg)
    elif method == "histogram":
        ref = global_histogram_reference(fm, cfg.histogram_bins)
        fn = lambda: histogram_score(fm, ref, cfg)
    elif method == "sww":
        ref = median_order_statistics_reference(fm, cfg)
        fn = lambda: sww_score(fm, ref, cfg)
    elif method == "fca":
        ref = median_order_statistics_reference(fm, cfg)
        fn = lambda: fca_score(fm, ref, cfg)
    else:
        raise InvalidParameter(f"method must be one of {METHODS}, got {method!r}")
    return fn


def time_method(method, fm, cfg, repetitions=3):
    """Median wall-clock seconds over `repetitions` runs (after one warm-up).

    Returns (seconds, score_map) with the map from the last timed run, so
    callers can check the harness did not perturb the numerics.
    """
    if repetitions < 3:
        raise InvalidParameter(f"repetitions must be >= 3, got {repetitions}")
    fn = _timed_score(method, fm, cfg)
    fn()  # warm-up, discarded
    times = []
    out = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def run_bench(sizes, methods=METHODS, channels=2, patch_size=5, bins=10,
              repetitions=3, seed=0, backends=None, threads=None):
    """Time each (method, backend) cell over the size grid and fit slopes."""
    if not sizes:
        raise InvalidParameter("size grid is empty")
    for m in methods:
        if m not in METHODS:
            raise InvalidParameter(f"method must be one of {METHODS}, got {m!r}")
    if backends is None:
        backends = (backend.backend_name(),)
    if threads is not None:
        backend.set_threads(threads)
    n_threads = threads if threads is not None else 0  # 0 = runtime default
    cfg = PatchConfig(patch_size=patch_size, histogram_bins=bins)
    result = BenchResult()
    prev = backend.backend_override() or "auto"
    for bk in backends:
        for method in methods:
            for side in sizes:
                fm = synthetic_features(side, channels, seed)
                try:
                    backend.set_backend(bk)
                    seconds, _ = time_method(method, fm, cfg, repetitions)
                finally:
                    backend.set_backend(prev)
                result.records.append(BenchRecord(
                    method=method, backend=bk, n_pixels=side * side,
                    patch_area=patch_size * patch_size, channels=channels,
                    bins=bins if method == "histogram" else 0,
                    seconds=seconds, repetitions=repetitions, threads=n_threads))
            cell = [r for r in result.records if r.method == method and r.backend == bk]
            if len(cell) >= 2:
                logn = np.log([r.n_pixels for r in cell])
                logt = np.log([max(r.seconds, 1e-9) for r in cell])
                result.slopes[(method, bk)] = float(np.polyfit(logn, logt, 1)[0])
    return result


def format_table(result):
    """Aligned text table plus the fitted slopes."""
    header = f"{'method':<10} {'backend':<8} {'N':>10} {'T^2':>5} {'D':>5} {'B':>4} {'reps':>5} {'seconds':>12}"
    lines = [header, "-" * len(header)]
    for r in result.records:
        lines.append(f"{r.method:<10} {r.backend:<8} {r.n_pixels:>10} {r.patch_area:>5} "
                     f"{r.channels:>5} {r.bins:>4} {r.repetitions:>5} {r.seconds:>12.6f}")
    for (method, bk), slope in sorted(result.slopes.items()):
        lines.append(f"slope[{method}/{bk}] = {slope:.3f}  (log-time vs log-N)")
    return "\n".join(lines) + "\n"


def format_csv(result):
    lines = ["method,backend,n_pixels,patch_area,channels,bins,repetitions,seconds"]
    for r in result.records:
        lines.append(f"{r.method},{r.backend},{r.n_pixels},{r.patch_area},"
                     f"{r.channels},{r.bins},{r.repetitions},{r.seconds:.9f}")
    return "\n".join(lines) + "\n"
