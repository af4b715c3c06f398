"""Evaluation of saliency predictions against binary ground truth.

Conventions, echoed in report metadata where they matter:

* An empty binary prediction scores precision 1, recall 0.
* Curves sweep the 256 thresholds k/255 over 8-bit quantized predictions,
  binarizing at quantized value >= k.
* The scalar F-measure binarizes at the adaptive threshold of twice the
  prediction mean, on raw float values.
* MAE averages per pixel within an image, then across images.
* AUC is the trapezoidal area of the ROC curve with (0,0) and (1,1)
  appended as anchors.
* The structure measure needs an external region/object evaluator; when
  none is supplied the score is reported as not computed, never guessed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import InvalidGroundTruthError
from .raster import GroundTruthMask, SaliencyMap, load_image, load_mask, resize_bilinear, to_gray

SEvaluator = Callable[[np.ndarray, np.ndarray], tuple[float, float]]

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".pgm", ".ppm", ".pnm")
_NUM_THRESHOLDS = 256


def precision_recall(pred: np.ndarray, gt: GroundTruthMask) -> tuple[float, float]:
    """Precision and recall of a binary prediction.

    An empty prediction makes no positive claims: precision 1, recall 0.
    """
    pred = np.asarray(pred, dtype=bool)
    if pred.shape != gt.values.shape:
        raise ValueError("prediction and ground truth shapes differ")
    positives = int(gt.values.sum())
    if positives == 0:
        raise InvalidGroundTruthError("ground truth has no foreground")
    claimed = int(pred.sum())
    if claimed == 0:
        return 1.0, 0.0
    tp = int((pred & (gt.values == 1)).sum())
    return tp / claimed, tp / positives


def f_measure(precision: float, recall: float, beta2: float = 0.3) -> float:
    """Weighted harmonic mean (1 + b2) * P * R / (b2 * P + R); F(0, 0) = 0."""
    if beta2 <= 0:
        raise ValueError(f"beta2 must be positive, got {beta2}")
    denom = beta2 * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + beta2) * precision * recall / denom


def adaptive_threshold(pred: SaliencyMap) -> float:
    """Twice the mean of the prediction."""
    return 2.0 * float(pred.values.mean())


def _quantize(pred: SaliencyMap) -> np.ndarray:
    v = pred.values
    if v.max() > 1.0:
        raise ValueError("predictions must lie in [0, 1]")
    return np.rint(v * 255.0).astype(np.int64)


def pr_curve(pred: SaliencyMap, gt: GroundTruthMask) -> tuple[np.ndarray, np.ndarray]:
    """Precision and recall at each of the 256 quantized thresholds.

    Recall is non-increasing in the threshold; an empty prediction tail
    keeps the (1, 0) convention.
    """
    q = _quantize(pred)
    if q.shape != gt.values.shape:
        raise ValueError("prediction and ground truth shapes differ")
    positives = int(gt.values.sum())
    if positives == 0:
        raise InvalidGroundTruthError("ground truth has no foreground")
    fg = gt.values == 1
    pos_hist = np.bincount(q[fg], minlength=_NUM_THRESHOLDS).astype(np.float64)
    all_hist = np.bincount(q.ravel(), minlength=_NUM_THRESHOLDS).astype(np.float64)
    # tp[k] counts quantized values >= k among foreground; suffix sums.
    tp = np.cumsum(pos_hist[::-1])[::-1]
    claimed = np.cumsum(all_hist[::-1])[::-1]
    precision = np.where(claimed > 0, tp / np.maximum(claimed, 1.0), 1.0)
    recall = tp / positives
    return precision, recall


def auc(pred: SaliencyMap, gt: GroundTruthMask) -> float:
    """Area under the ROC curve across the quantized thresholds."""
    q = _quantize(pred)
    if q.shape != gt.values.shape:
        raise ValueError("prediction and ground truth shapes differ")
    fg = gt.values == 1
    positives = int(fg.sum())
    negatives = int((~fg).sum())
    if positives == 0:
        raise InvalidGroundTruthError("ground truth has no foreground")
    if negatives == 0:
        raise InvalidGroundTruthError("ground truth has no background")
    pos_hist = np.bincount(q[fg], minlength=_NUM_THRESHOLDS).astype(np.float64)
    neg_hist = np.bincount(q[~fg], minlength=_NUM_THRESHOLDS).astype(np.float64)
    tp = np.cumsum(pos_hist[::-1])[::-1]
    fp = np.cumsum(neg_hist[::-1])[::-1]
    tpr = tp / positives
    fpr = fp / negatives
    # Thresholds descending produce ascending ROC points.
    fpr_pts = np.concatenate([[0.0], fpr[::-1], [1.0]])
    tpr_pts = np.concatenate([[0.0], tpr[::-1], [1.0]])
    return float(np.trapezoid(tpr_pts, fpr_pts))


def mae(pred: SaliencyMap, gt: GroundTruthMask) -> float:
    """Mean absolute difference between prediction and mask over pixels."""
    if pred.values.shape != gt.values.shape:
        raise ValueError("prediction and ground truth shapes differ")
    return float(np.abs(pred.values - gt.values.astype(np.float64)).mean())


def f_adaptive(pred: SaliencyMap, gt: GroundTruthMask, beta2: float = 0.3) -> tuple[float, float, float]:
    """Precision, recall and F at the adaptive threshold, as one sample."""
    t = adaptive_threshold(pred)
    p, r = precision_recall(pred.values >= t, gt)
    return p, r, f_measure(p, r, beta2)


def s_measure(
    pred: SaliencyMap,
    gt: GroundTruthMask,
    evaluator: SEvaluator | None,
    alpha: float = 0.5,
) -> float | None:
    """Structure measure alpha * S_object + (1 - alpha) * S_region.

    The object and region terms come from the supplied evaluator; without
    one the measure is not computable and None is returned.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if evaluator is None:
        return None
    s_o, s_r = evaluator(pred.values, gt.values)
    return alpha * float(s_o) + (1.0 - alpha) * float(s_r)


@dataclass(frozen=True)
class ImageResult:
    name: str
    mae: float
    f_measure: float
    s_measure: float | None
    precision: float
    recall: float


@dataclass(frozen=True)
class EvalReport:
    """Everything the evaluation run produced, ready for serialization."""

    per_image: list[ImageResult]
    aggregates: dict[str, float | None]
    auc: float
    curve_precision: np.ndarray
    curve_recall: np.ndarray
    curve_f: np.ndarray
    skipped: list[dict[str, str]]
    metadata: dict[str, str]
    config: dict = field(default_factory=dict)
    schema: int = 1

    def to_json(self) -> str:
        doc = {
            "schema": self.schema,
            "config": self.config,
            "aggregates": self.aggregates,
            "auc": self.auc,
            "per_image": [
                {
                    "name": r.name,
                    "mae": r.mae,
                    "f_measure": r.f_measure,
                    "s_measure": r.s_measure,
                    "precision": r.precision,
                    "recall": r.recall,
                }
                for r in self.per_image
            ],
            "curves": {
                "precision": [float(x) for x in self.curve_precision],
                "recall": [float(x) for x in self.curve_recall],
                "f_measure": [float(x) for x in self.curve_f],
            },
            "skipped": self.skipped,
            "metadata": self.metadata,
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["name,mae,f_measure,s_measure,precision,recall"]
        for r in self.per_image:
            s = "" if r.s_measure is None else f"{r.s_measure:.10g}"
            lines.append(
                f"{r.name},{r.mae:.10g},{r.f_measure:.10g},{s},{r.precision:.10g},{r.recall:.10g}"
            )
        return "\n".join(lines) + "\n"

    def pr_curve_text(self) -> str:
        lines = [
            f"{r:.10g} {p:.10g}"
            for r, p in zip(self.curve_recall.tolist(), self.curve_precision.tolist())
        ]
        return "\n".join(lines) + "\n"

    def f_curve_text(self) -> str:
        lines = [
            f"{k / 255.0:.10g} {f:.10g}" for k, f in enumerate(self.curve_f.tolist())
        ]
        return "\n".join(lines) + "\n"


def _index_dir(directory: Path) -> dict[str, Path]:
    files: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() in _IMAGE_SUFFIXES and path.stem not in files:
            files[path.stem] = path
    return files


def evaluate(
    pred_dir: str | Path,
    gt_dir: str | Path,
    beta2: float = 0.3,
    s_alpha: float = 0.5,
    s_evaluator: SEvaluator | None = None,
    config_echo: dict | None = None,
) -> EvalReport:
    """Score every prediction in ``pred_dir`` against its name-matched mask.

    Files pair by stem. Predictions are resampled to the mask's size when
    they differ. Unmatched or unreadable files (and masks without any
    foreground) are listed as skipped with a reason instead of aborting
    the run; an empty match set is an error.
    """
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    if not pred_dir.is_dir():
        raise ValueError(f"prediction directory not found: {pred_dir}")
    if not gt_dir.is_dir():
        raise ValueError(f"ground-truth directory not found: {gt_dir}")
    preds = _index_dir(pred_dir)
    gts = _index_dir(gt_dir)
    names = sorted(preds.keys() & gts.keys())
    if not names:
        raise ValueError(f"no name-matched pairs between {pred_dir} and {gt_dir}")

    skipped: list[dict[str, str]] = []
    for stem in sorted(preds.keys() - gts.keys()):
        skipped.append({"name": stem, "reason": "no matching ground truth"})
    for stem in sorted(gts.keys() - preds.keys()):
        skipped.append({"name": stem, "reason": "no matching prediction"})

    results: list[ImageResult] = []
    curve_p = np.zeros(_NUM_THRESHOLDS)
    curve_r = np.zeros(_NUM_THRESHOLDS)
    auc_sum = 0.0
    for name in names:
        try:
            raw = to_gray(load_image(preds[name])).data
            gt = load_mask(gts[name])
            if raw.shape != gt.values.shape:
                raw = resize_bilinear(raw, gt.width, gt.height)
            pred = SaliencyMap(raw)
            p, r, f = f_adaptive(pred, gt, beta2)
            s = s_measure(pred, gt, s_evaluator, s_alpha)
            cp, cr = pr_curve(pred, gt)
            a = auc(pred, gt)
            m = mae(pred, gt)
        except (OSError, ValueError, InvalidGroundTruthError) as exc:
            skipped.append({"name": name, "reason": str(exc)})
            continue
        results.append(
            ImageResult(name=name, mae=m, f_measure=f, s_measure=s, precision=p, recall=r)
        )
        curve_p += cp
        curve_r += cr
        auc_sum += a

    if not results:
        raise ValueError("no image pair could be evaluated")

    n = len(results)
    curve_p /= n
    curve_r /= n
    curve_f = np.array([f_measure(p, r, beta2) for p, r in zip(curve_p, curve_r)])
    s_values = [r.s_measure for r in results if r.s_measure is not None]
    aggregates: dict[str, float | None] = {
        "mae": float(np.mean([r.mae for r in results])),
        "f_measure": float(np.mean([r.f_measure for r in results])),
        "s_measure": float(np.mean(s_values)) if s_values else None,
        "precision": float(np.mean([r.precision for r in results])),
        "recall": float(np.mean([r.recall for r in results])),
    }
    metadata = {
        "thresholds": "k/255 for k in 0..255 on 8-bit quantized predictions",
        "scalar_f": "binarized at 2 * mean of the raw prediction",
        "mae": "mean per pixel within an image, then mean over images",
        "auc": "trapezoidal ROC area with (0,0) and (1,1) anchors",
        "s_measure": (
            f"alpha blend with alpha={s_alpha:g}" if s_evaluator is not None else "not computed"
        ),
        "curve_f": "f_measure of the image-averaged precision and recall per threshold",
    }
    return EvalReport(
        per_image=results,
        aggregates=aggregates,
        auc=auc_sum / n,
        curve_precision=curve_p,
        curve_recall=curve_r,
        curve_f=curve_f,
        skipped=skipped,
        metadata=metadata,
        config=config_echo or {},
    )


__all__ = [
    "precision_recall",
    "f_measure",
    "adaptive_threshold",
    "pr_curve",
    "auc",
    "mae",
    "f_adaptive",
    "s_measure",
    "ImageResult",
    "EvalReport",
    "evaluate",
    "SEvaluator",
]
