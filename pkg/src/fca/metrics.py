"""Evaluation protocol: pixel AUROC, PRO up to an FPR limit, max F1, image AUROC.

Scores are pooled over the whole split before sweeping thresholds, and
ground-truth regions are the 8-connected components of the masks, pooled
across images as well. All metrics are invariant under strictly monotone
transforms of the scores; ties are handled by the rank (Mann-Whitney)
convention for AUROC and by treating each distinct score as one threshold
group for the sweeps.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import InvalidParameter, MetricUndefined

# Above this many distinct scores the sweeps fall back to quantile-spaced
# thresholds (plus exact interpolation at the FPR boundary).
SWEEP_EXACT_LIMIT = 100_000
SWEEP_QUANTILE_COUNT = 2000

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class LabeledScores:
    """Pooled per-pixel scores, binary labels, and ground-truth region ids."""

    scores: np.ndarray
    labels: np.ndarray
    region_ids: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        labels = np.asarray(self.labels).reshape(-1)
        regions = np.asarray(self.region_ids).reshape(-1)
        if not (len(scores) == len(labels) == len(regions)):
            raise InvalidParameter("scores, labels and region_ids must have equal length")
        if not np.isin(labels, (0, 1)).all():
            raise InvalidParameter("labels must be binary")
        if np.any((regions > 0) != (labels == 1)):
            raise InvalidParameter("region ids must be positive exactly on anomalous pixels")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels.astype(np.int8))
        object.__setattr__(self, "region_ids", regions.astype(np.int64))

    @classmethod
    def from_maps(cls, score_maps, masks):
        """Pool maps and masks over a split, labeling regions per image."""
        scores, labels, regions = [], [], []
        offset = 0
        for am, mask in zip(score_maps, masks):
            arr = am.scores if hasattr(am, "scores") else np.asarray(am, dtype=float)
            mask = np.asarray(mask)
            if arr.shape != mask.shape:
                raise InvalidParameter(f"score map {arr.shape} vs mask {mask.shape}")
            comp, n = ndimage.label(mask != 0, structure=_EIGHT_CONNECTED)
            comp = comp.astype(np.int64)
            comp[comp > 0] += offset
            offset += n
            scores.append(arr.reshape(-1))
            labels.append((mask != 0).astype(np.int8).reshape(-1))
            regions.append(comp.reshape(-1))
        return cls(np.concatenate(scores), np.concatenate(labels), np.concatenate(regions))


@dataclass
class EvalReport:
    """The four headline numbers for one split (image_auroc optional)."""

    auroc: float
    pro_03: float
    f1_max: float
    threshold_at_f1: float
    image_auroc: Optional[float] = None

    def as_dict(self):
        out = {"auroc": self.auroc, "pro_03": self.pro_03, "f1_max": self.f1_max,
               "threshold_at_f1": self.threshold_at_f1}
        if self.image_auroc is not None:
            out["image_auroc"] = self.image_auroc
        return out

    def as_text(self):
        return "".join(f"{k}={v:.6f}\n" for k, v in self.as_dict().items())

    def as_json(self):
        return json.dumps(self.as_dict(), indent=2) + "\n"


def auroc_pixel(ls):
    """Area under the ROC curve over pooled pixels, ties by average rank."""
    labels = ls.labels
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefined("AUROC needs both classes present")
    return _rank_auc(ls.scores, labels, n_pos, n_neg)


def _rank_auc(scores, labels, n_pos, n_neg):
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _sweep_thresholds(scores):
    distinct = np.unique(scores)[::-1]  # descending
    if len(distinct) <= SWEEP_EXACT_LIMIT:
        return distinct
    qs = np.linspace(0.0, 1.0, SWEEP_QUANTILE_COUNT)
    return np.unique(np.quantile(distinct, qs))[::-1]


def pro_score(ls, fpr_limit=0.3):
    """Per-region overlap averaged over regions, integrated over FPR.

    The piecewise-linear (FPR, PRO) curve from sweeping thresholds high to
    low is integrated up to `fpr_limit` (linear interpolation at the
    boundary) and normalized by the limit.
    """
    if not (0.0 < fpr_limit <= 1.0):
        raise InvalidParameter(f"fpr_limit must be in (0, 1], got {fpr_limit}")
    regions = np.unique(ls.region_ids)
    regions = regions[regions > 0]
    if len(regions) == 0:
        raise MetricUndefined("PRO needs at least one ground-truth region")
    n_neg = int((ls.labels == 0).sum())
    if n_neg == 0:
        raise MetricUndefined("PRO needs negative pixels to sweep the FPR")

    # remap region ids to 0..K-1 for bincount
    rid = np.full(len(ls.region_ids), -1, dtype=np.int64)
    pos_mask = ls.region_ids > 0
    rid[pos_mask] = np.searchsorted(regions, ls.region_ids[pos_mask])
    sizes = np.bincount(rid[pos_mask], minlength=len(regions)).astype(np.float64)

    order = np.argsort(ls.scores, kind="mergesort")[::-1]
    s_sorted = ls.scores[order]
    neg_sorted = (ls.labels[order] == 0).astype(np.float64)
    rid_sorted = rid[order]

    thresholds = _sweep_thresholds(ls.scores)
    area = 0.0
    prev_fpr, prev_pro = 0.0, 0.0
    hits = np.zeros(len(regions))
    fp = 0.0
    pos_idx = 0
    done = False
    for t in thresholds:
        while pos_idx < len(s_sorted) and s_sorted[pos_idx] >= t:
            fp += neg_sorted[pos_idx]
            r = rid_sorted[pos_idx]
            if r >= 0:
                hits[r] += 1.0
            pos_idx += 1
        fpr = fp / n_neg
        pro = float((hits / sizes).mean())
        if fpr >= fpr_limit:
            if fpr > prev_fpr:
                interp = prev_pro + (pro - prev_pro) * (fpr_limit - prev_fpr) / (fpr - prev_fpr)
            else:
                interp = pro
            area += (fpr_limit - prev_fpr) * (prev_pro + interp) / 2.0
            done = True
            break
        area += (fpr - prev_fpr) * (prev_pro + pro) / 2.0
        prev_fpr, prev_pro = fpr, pro
    if not done:
        # curve ended before the limit (all thresholds swept): flat extension
        area += (fpr_limit - prev_fpr) * prev_pro
    return float(area / fpr_limit)


def f1_max(ls):
    """Maximum F1 over all thresholds; ties resolve to the higher threshold."""
    n_pos = int(ls.labels.sum())
    if n_pos == 0:
        raise MetricUndefined("F1 needs positive pixels")
    order = np.argsort(ls.scores, kind="mergesort")[::-1]
    s_sorted = ls.scores[order]
    pos_sorted = (ls.labels[order] == 1).astype(np.float64)
    thresholds = _sweep_thresholds(ls.scores)
    best_f1, best_t = -1.0, None
    tp = 0.0
    n_pred = 0
    idx = 0
    for t in thresholds:
        while idx < len(s_sorted) and s_sorted[idx] >= t:
            tp += pos_sorted[idx]
            idx += 1
            n_pred += 1
        f1 = 2.0 * tp / (n_pred + n_pos) if (n_pred + n_pos) else 0.0
        if f1 > best_f1:
            best_f1, best_t = f1, float(t)
    return float(best_f1), best_t


def image_scores(score_maps):
    """Image-level score: the maximum of each (already cropped) map."""
    return np.array([float(np.max(am.scores if hasattr(am, "scores") else am))
                     for am in score_maps])


def image_auroc(score_maps, labels):
    """AUROC of per-image max scores against binary image labels."""
    labels = np.asarray(labels).reshape(-1)
    if not np.isin(labels, (0, 1)).all():
        raise InvalidParameter("image labels must be binary")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefined("image AUROC needs both classes present")
    return _rank_auc(image_scores(score_maps), labels, n_pos, n_neg)


def evaluate_split(score_maps, masks, image_labels=None, fpr_limit=0.3):
    """All metrics for one pooled split; image AUROC when labels are given."""
    ls = LabeledScores.from_maps(score_maps, masks)
    f1, thr = f1_max(ls)
    img_auc = None
    if image_labels is not None:
        img_auc = image_auroc(score_maps, image_labels)
    return EvalReport(
        auroc=auroc_pixel(ls),
        pro_03=pro_score(ls, fpr_limit),
        f1_max=f1,
        threshold_at_f1=thr,
        image_auroc=img_auc,
    )
