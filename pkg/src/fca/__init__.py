"""Zero-shot texture anomaly localization by rank-correspondence patch statistics."""

from .errors import (
    ConfigError,
    DatasetError,
    FcaError,
    FormatError,
    InvalidParameter,
    MetricUndefined,
)
from .grid import (
    AnomalyMap,
    FeatureMap,
    GaussianKernel,
    gaussian_kernel,
    normalize_channels,
    upsample_bilinear,
)
from .stats import (
    NonComplianceMap,
    PatchConfig,
    SortedReference,
    fca_score,
    histogram_score,
    moments_score,
    noncompliance,
    sww_score,
)
from .refs import (
    ReferenceSpec,
    global_histogram_reference,
    global_mean_reference,
    knn_score,
    median_order_statistics_reference,
    random_patch_references,
)

__version__ = "0.1.0"
