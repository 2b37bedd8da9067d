"""Image-level value metrics for active selection.

All metrics score an unlabeled image by how much labeling it is expected
to help the current detector. Detection-based metrics work on the raw
grid output, before confidence thresholding and NMS.
"""

from __future__ import annotations

import numpy as np

from .detector import DetectorModel, GridOutput, decode, forward

METRIC_KINDS = ("sum", "avg", "max", "det_class_diff", "weighted_cell_sum", "random")


def margin_1vs2(probs: np.ndarray) -> float:
    """1 - (best minus second-best probability); high means uncertain."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError("need a distribution over at least two classes")
    top2 = np.partition(p, -2)[-2:]
    return float(1.0 - (top2[1] - top2[0]))


def aggregate_sum(values: list[float]) -> float:
    return float(np.sum(values)) if len(values) else 0.0


def aggregate_avg(values: list[float]) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def aggregate_max(values: list[float]) -> float:
    return float(np.max(values)) if len(values) else 0.0


def det_class_diff(grid: GridOutput) -> float:
    """Sum over cells of squared (best confidence - best class probability).

    Large when objectness and classification disagree about a cell.
    """
    best_conf = grid.confidences.max(axis=1)
    best_cls = grid.class_scores.max(axis=1)
    return float(((best_conf - best_cls) ** 2).sum())


def weighted_cell_sum(grid: GridOutput) -> float:
    """Sum over cells of squared (best confidence * 1-vs-2 margin)."""
    best_conf = grid.confidences.max(axis=1)
    p = np.sort(grid.class_scores, axis=1)
    margins = 1.0 - (p[:, -1] - p[:, -2])
    return float(((best_conf * margins) ** 2).sum())


def detection_margins(model: DetectorModel, image: np.ndarray) -> list[float]:
    """1-vs-2 margins of the decoded detections of one image."""
    grid = forward(model, image)
    dets = decode(grid, model.config.confidence_threshold, model.config.nms_iou)
    return [margin_1vs2(d.class_distribution) for d in dets]


def value_image(
    metric: str,
    model: DetectorModel,
    image: np.ndarray,
    rng: np.random.Generator | None = None,
) -> float:
    """Score one unlabeled image under the named metric.

    Detection aggregations (sum/avg/max) use the decoded detections and
    return 0 when nothing is detected; grid metrics use raw output.
    ``random`` draws from ``rng`` and needs one.
    """
    if metric not in METRIC_KINDS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRIC_KINDS}")
    if metric == "random":
        if rng is None:
            raise ValueError("the random metric needs an rng")
        return float(rng.random())
    if metric in ("sum", "avg", "max"):
        margins = detection_margins(model, image)
        return {"sum": aggregate_sum, "avg": aggregate_avg, "max": aggregate_max}[metric](margins)
    grid = forward(model, image)
    if metric == "det_class_diff":
        return det_class_diff(grid)
    return weighted_cell_sum(grid)


def value_batch(image_values: list[float]) -> float:
    """Batch value = sum of its image values (empty batch scores 0)."""
    return float(np.sum(image_values)) if len(image_values) else 0.0
