"""Miniature single-pass grid detector.

The detector divides the image into a fixed grid and predicts, per cell,
a class distribution, per-box objectness confidences, and box geometry,
from a shared linear map over the cell's normalized pixel patch (cell
plus a context margin). Training is plain SGD on a composite loss;
incremental updates mix old and new examples per minibatch slot.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .synthdata import GroundTruthBox, Scene

MODEL_MAGIC = b"alkit-detector-1"


@dataclass(frozen=True)
class GridConfig:
    s_h: int = 6
    s_v: int = 6
    boxes_per_cell: int = 1
    num_classes: int = 5
    context_margin: int = 4
    confidence_threshold: float = 0.2
    nms_iou: float = 0.5

    def __post_init__(self) -> None:
        if min(self.s_h, self.s_v, self.boxes_per_cell, self.num_classes) < 1:
            raise ValueError("grid dimensions must be >= 1")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must be in [0,1]")

    @property
    def num_cells(self) -> int:
        return self.s_h * self.s_v


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 0.01
    iterations: int = 5000
    minibatch: int = 16
    weight_decay: float = 1e-4


@dataclass
class DetectorModel:
    config: GridConfig
    image_size: int
    norm_mean: np.ndarray  # (F,)
    norm_std: np.ndarray  # (F,)
    w_class: np.ndarray  # (K, F)
    b_class: np.ndarray  # (K,)
    w_conf: np.ndarray  # (B, F)
    b_conf: np.ndarray  # (B,)
    w_geom: np.ndarray  # (B*4, F)
    b_geom: np.ndarray  # (B*4,)
    hyper: TrainHyper = field(default_factory=TrainHyper)

    @property
    def feature_dim(self) -> int:
        return self.norm_mean.shape[0]

    def copy(self) -> "DetectorModel":
        return DetectorModel(
            config=self.config,
            image_size=self.image_size,
            norm_mean=self.norm_mean.copy(),
            norm_std=self.norm_std.copy(),
            w_class=self.w_class.copy(),
            b_class=self.b_class.copy(),
            w_conf=self.w_conf.copy(),
            b_conf=self.b_conf.copy(),
            w_geom=self.w_geom.copy(),
            b_geom=self.b_geom.copy(),
            hyper=self.hyper,
        )

    def weights_digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        for arr in (self.norm_mean, self.norm_std, self.w_class, self.b_class,
                    self.w_conf, self.b_conf, self.w_geom, self.b_geom):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        return h.hexdigest()


@dataclass
class GridOutput:
    """Raw per-cell detector output; cell i = row * s_h + col."""

    class_scores: np.ndarray  # (cells, K), rows sum to 1
    confidences: np.ndarray  # (cells, B), in [0,1]
    geometry: np.ndarray  # (cells, B, 4): dx, dy in cell units, w, h normalized
    s_h: int
    s_v: int


@dataclass
class Detection:
    box: tuple[float, float, float, float]  # cx, cy, w, h normalized
    class_distribution: np.ndarray
    confidence: float

    @property
    def class_id(self) -> int:
        return int(np.argmax(self.class_distribution))


def initialize_model(config: GridConfig, image_size: int, hyper: TrainHyper | None = None) -> DetectorModel:
    """Zero-weight model: uniform class scores, 0.5 confidences everywhere."""
    if image_size % config.s_h != 0 or image_size % config.s_v != 0:
        raise ValueError("image_size must be divisible by the grid dimensions")
    ph = image_size // config.s_v + 2 * config.context_margin
    pw = image_size // config.s_h + 2 * config.context_margin
    f = ph * pw * 3
    b = config.boxes_per_cell
    return DetectorModel(
        config=config,
        image_size=image_size,
        norm_mean=np.zeros(f),
        norm_std=np.ones(f),
        w_class=np.zeros((config.num_classes, f)),
        b_class=np.zeros(config.num_classes),
        w_conf=np.zeros((b, f)),
        b_conf=np.zeros(b),
        w_geom=np.zeros((b * 4, f)),
        b_geom=np.zeros(b * 4),
        hyper=hyper or TrainHyper(),
    )


def _patch_indices(model: DetectorModel) -> tuple[np.ndarray, np.ndarray]:
    s = model.image_size
    cfg = model.config
    ch, cw = s // cfg.s_v, s // cfg.s_h
    m = cfg.context_margin
    rows = np.stack([np.clip(np.arange(r * ch - m, (r + 1) * ch + m), 0, s - 1) for r in range(cfg.s_v)])
    cols = np.stack([np.clip(np.arange(c * cw - m, (c + 1) * cw + m), 0, s - 1) for c in range(cfg.s_h)])
    return rows, cols


def extract_features(model: DetectorModel, image: np.ndarray) -> np.ndarray:
    """Raw per-cell patch features, shape (cells, F)."""
    if image.shape[:2] != (model.image_size, model.image_size):
        raise ValueError(
            f"image size {image.shape[:2]} does not match model input {model.image_size}"
        )
    rows, cols = _patch_indices(model)
    # (s_v, s_h, ph, pw, 3) gathered in one fancy index
    patches = image[rows[:, None, :, None], cols[None, :, None, :], :]
    return patches.reshape(model.config.num_cells, -1)


def _normalize(model: DetectorModel, feats: np.ndarray) -> np.ndarray:
    return (feats - model.norm_mean) / model.norm_std


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _heads(model: DetectorModel, xn: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Class probabilities, confidences and geometry for normalized features."""
    b = model.config.boxes_per_cell
    probs = _softmax(xn @ model.w_class.T + model.b_class)
    confs = _sigmoid(xn @ model.w_conf.T + model.b_conf)
    geom = (xn @ model.w_geom.T + model.b_geom).reshape(-1, b, 4)
    return probs, confs, geom


def forward(model: DetectorModel, image: np.ndarray) -> GridOutput:
    xn = _normalize(model, extract_features(model, image))
    probs, confs, geom = _heads(model, xn)
    return GridOutput(
        class_scores=probs,
        confidences=confs,
        geometry=geom,
        s_h=model.config.s_h,
        s_v=model.config.s_v,
    )


def _decode_slot(entry: np.ndarray, row: int, col: int, s_h: int, s_v: int) -> tuple[float, float, float, float]:
    dx, dy, w, h = entry
    cx = float(np.clip((col + 0.5 + dx) / s_h, 0.0, 1.0))
    cy = float(np.clip((row + 0.5 + dy) / s_v, 0.0, 1.0))
    return cx, cy, float(np.clip(w, 0.0, 1.0)), float(np.clip(h, 0.0, 1.0))


def cell_box(grid: GridOutput, cell: int, j: int) -> tuple[float, float, float, float]:
    """Absolute normalized box decoded from one (cell, box) geometry entry."""
    row, col = divmod(cell, grid.s_h)
    return _decode_slot(grid.geometry[cell, j], row, col, grid.s_h, grid.s_v)


def iou_cxcywh(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    ax0, ay0, ax1, ay1 = a[0] - a[2] / 2, a[1] - a[3] / 2, a[0] + a[2] / 2, a[1] + a[3] / 2
    bx0, by0, bx1, by1 = b[0] - b[2] / 2, b[1] - b[3] / 2, b[0] + b[2] / 2, b[1] + b[3] / 2
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


def decode(grid: GridOutput, tau: float, nms_iou: float) -> list[Detection]:
    """Threshold, convert to absolute boxes, then greedy per-class NMS.

    Result is sorted by confidence descending.
    """
    if not (0.0 <= tau <= 1.0 and 0.0 <= nms_iou <= 1.0):
        raise ValueError("thresholds must be in [0,1]")
    cand: list[Detection] = []
    cells, b = grid.confidences.shape
    for cell in range(cells):
        for j in range(b):
            conf = float(grid.confidences[cell, j])
            if conf >= tau:
                cand.append(
                    Detection(
                        box=cell_box(grid, cell, j),
                        class_distribution=grid.class_scores[cell],
                        confidence=conf,
                    )
                )
    # stable order: confidence desc, then candidate index
    order = sorted(range(len(cand)), key=lambda i: (-cand[i].confidence, i))
    kept: list[Detection] = []
    kept_by_class: dict[int, list[Detection]] = {}
    for i in order:
        det = cand[i]
        same = kept_by_class.setdefault(det.class_id, [])
        if any(iou_cxcywh(det.box, k.box) > nms_iou for k in same):
            continue
        same.append(det)
        kept.append(det)
    return kept


# ---------------------------------------------------------------------------
# training


@dataclass
class CellTargets:
    """Per-cell regression/classification targets for one scene batch.

    Arrays are stacked over scenes: leading dim = n_scenes * cells.
    """

    class_ids: np.ndarray  # (N,) int, -1 for no-object cells
    conf_target: np.ndarray  # (N, B)
    conf_weight: np.ndarray  # (N, B)
    geom_target: np.ndarray  # (N, B, 4)
    geom_mask: np.ndarray  # (N, B) bool


NOOBJ_CONF_WEIGHT = 0.1


def build_targets(model: DetectorModel, scenes: list[Scene], feats: np.ndarray) -> CellTargets:
    """Assign ground truth to cells and derive loss targets.

    The confidence target for an object cell is the IoU of the currently
    predicted box with its ground truth, evaluated once; targets are
    constants of the subsequent gradient step. A box belongs to the cell
    containing its center; the first listed box wins a contested cell.
    With several boxes per cell slot, ground truth goes to the slot with
    the highest current IoU.
    """
    cells = model.config.num_cells
    xn = _normalize(model, feats.reshape(len(scenes) * cells, -1))
    return _build_targets_norm(model, scenes, xn)


def _build_targets_norm(model: DetectorModel, scenes: list[Scene], xn: np.ndarray) -> CellTargets:
    """build_targets on already-normalized (n·cells, F) features.

    Geometry is predicted only for the cells that received a ground-truth
    box; everything else in the targets is independent of the model.
    """
    cfg = model.config
    cells, b = cfg.num_cells, cfg.boxes_per_cell
    n = len(scenes)
    class_ids = np.full(n * cells, -1, dtype=int)
    conf_target = np.zeros((n * cells, b))
    conf_weight = np.full((n * cells, b), NOOBJ_CONF_WEIGHT)
    geom_target = np.zeros((n * cells, b, 4))
    geom_mask = np.zeros((n * cells, b), dtype=bool)

    assigned: list[tuple[int, int, int, GroundTruthBox]] = []  # (flat idx, row, col, gt)
    for s, scene in enumerate(scenes):
        if scene.boxes is None:
            raise ValueError("training scenes need annotations")
        taken: set[int] = set()
        for gt in scene.boxes:
            col = min(int(gt.cx * cfg.s_h), cfg.s_h - 1)
            row = min(int(gt.cy * cfg.s_v), cfg.s_v - 1)
            cell = row * cfg.s_h + col
            if cell in taken:
                continue
            taken.add(cell)
            assigned.append((s * cells + cell, row, col, gt))
    if not assigned:
        return CellTargets(class_ids, conf_target, conf_weight, geom_target, geom_mask)

    sel = np.array([a[0] for a in assigned])
    geom = (xn[sel] @ model.w_geom.T + model.b_geom).reshape(len(sel), b, 4)
    for k, (idx, row, col, gt) in enumerate(assigned):
        ious = [
            iou_cxcywh(
                _decode_slot(geom[k, j], row, col, cfg.s_h, cfg.s_v),
                (gt.cx, gt.cy, gt.w, gt.h),
            )
            for j in range(b)
        ]
        j = int(np.argmax(ious))
        class_ids[idx] = gt.class_id
        conf_target[idx, j] = ious[j]
        conf_weight[idx, j] = 1.0
        geom_target[idx, j] = (
            gt.cx * cfg.s_h - (col + 0.5),
            gt.cy * cfg.s_v - (row + 0.5),
            gt.w,
            gt.h,
        )
        geom_mask[idx, j] = True
    return CellTargets(class_ids, conf_target, conf_weight, geom_target, geom_mask)


def loss_and_grads(
    model: DetectorModel, feats: np.ndarray, targets: CellTargets
) -> tuple[float, dict[str, np.ndarray]]:
    """Composite loss (mean over scenes) and analytic gradients.

    Squared error on sigmoid confidences (object cells weighted 1.0,
    empty cells 0.1), squared error on geometry for assigned slots,
    cross-entropy on the class distribution of object cells, plus an L2
    penalty on the weight matrices.
    """
    xn = _normalize(model, feats.reshape(-1, model.feature_dim))
    return _loss_and_grads_norm(model, xn, targets)


def _loss_and_grads_norm(
    model: DetectorModel, xn: np.ndarray, targets: CellTargets
) -> tuple[float, dict[str, np.ndarray]]:
    """loss_and_grads on already-normalized (n·cells, F) features."""
    n_scenes = xn.shape[0] // model.config.num_cells
    probs, confs, geom = _heads(model, xn)
    inv = 1.0 / n_scenes

    obj = targets.class_ids >= 0
    loss_cls = 0.0
    dz_cls = np.zeros_like(probs)
    if obj.any():
        p_true = probs[obj, targets.class_ids[obj]]
        loss_cls = -np.log(np.maximum(p_true, 1e-300)).sum()
        dz_cls[obj] = probs[obj]
        dz_cls[obj, targets.class_ids[obj]] -= 1.0

    diff = confs - targets.conf_target
    loss_conf = float((targets.conf_weight * diff**2).sum())
    dz_conf = targets.conf_weight * 2.0 * diff * confs * (1.0 - confs)

    gdiff = np.where(targets.geom_mask[..., None], geom - targets.geom_target, 0.0)
    loss_geom = float((gdiff**2).sum())
    dz_geom = (2.0 * gdiff).reshape(len(xn), -1)

    wd = model.hyper.weight_decay
    loss = inv * (loss_cls + loss_conf + loss_geom) + 0.5 * wd * (
        float((model.w_class**2).sum()) + float((model.w_conf**2).sum()) + float((model.w_geom**2).sum())
    )
    grads = {
        "w_class": inv * dz_cls.T @ xn + wd * model.w_class,
        "b_class": inv * dz_cls.sum(axis=0),
        "w_conf": inv * dz_conf.T @ xn + wd * model.w_conf,
        "b_conf": inv * dz_conf.sum(axis=0),
        "w_geom": inv * dz_geom.T @ xn + wd * model.w_geom,
        "b_geom": inv * dz_geom.sum(axis=0),
    }
    return float(loss), grads


def _sgd_step(model: DetectorModel, grads: dict[str, np.ndarray], lr: float) -> None:
    model.w_class -= lr * grads["w_class"]
    model.b_class -= lr * grads["b_class"]
    model.w_conf -= lr * grads["w_conf"]
    model.b_conf -= lr * grads["b_conf"]
    model.w_geom -= lr * grads["w_geom"]
    model.b_geom -= lr * grads["b_geom"]


def _fit_norm_stats(feats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Center per pixel and scale so typical patches have unit norm.

    Folding sqrt(F) into the stored std keeps the per-step change of any
    head output near lr, which makes the default learning rate stable
    regardless of patch size. The std floor stops near-constant pixels
    from blowing up on data outside the training set.
    """
    flat = feats.reshape(-1, feats.shape[-1])
    mean = flat.mean(axis=0)
    std = np.maximum(flat.std(axis=0), 1e-2) * np.sqrt(flat.shape[-1])
    return mean, std


def feature_cache(model: DetectorModel, scenes: list[Scene]) -> np.ndarray:
    """(n_scenes, cells, F) raw features for repeated minibatch sampling."""
    return np.stack([extract_features(model, s.image) for s in scenes])


def train_initial(
    model: DetectorModel,
    labeled: list[Scene],
    hyper: TrainHyper | None = None,
    seed: int = 0,
    trace: list[float] | None = None,
) -> DetectorModel:
    """SGD from the given model; normalization stats are fit here."""
    if not labeled:
        raise ValueError("empty training set")
    hyper = hyper or model.hyper
    if hyper.iterations == 0:
        return model.copy()
    rng = np.random.default_rng(seed)
    out = model.copy()
    out.hyper = hyper
    feats = feature_cache(model, labeled)
    out.norm_mean, out.norm_std = _fit_norm_stats(feats)
    xn_cache = _normalize(out, feats)  # (n, cells, F); stats are now frozen
    for _ in range(hyper.iterations):
        idx = rng.integers(0, len(labeled), size=hyper.minibatch)
        batch_scenes = [labeled[i] for i in idx]
        xn = xn_cache[idx].reshape(-1, out.feature_dim)
        targets = _build_targets_norm(out, batch_scenes, xn)
        loss, grads = _loss_and_grads_norm(out, xn, targets)
        _sgd_step(out, grads, hyper.lr)
        if trace is not None:
            trace.append(loss)
    return out


def sample_mixed_minibatch(
    rng: np.random.Generator, lam: float, n_old: int, n_new: int, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-slot pool choice for one minibatch.

    Each slot comes from the old pool with probability ``lam``, else from
    the new batch. Both index streams are always drawn so the RNG state
    advances identically for every ``lam``.
    """
    old_mask = rng.random(size) < lam
    old_idx = rng.integers(0, max(n_old, 1), size=size)
    new_idx = rng.integers(0, max(n_new, 1), size=size)
    return old_mask, old_idx, new_idx


def incremental_update(
    model: DetectorModel,
    old_pool: list[Scene],
    new_batch: list[Scene],
    lam: float = 0.5,
    iterations: int = 100,
    seed: int = 0,
    trace: list[float] | None = None,
) -> DetectorModel:
    """Update with minibatches mixed from old and new examples.

    Merging the new batch into the old pool afterwards is the caller's
    job. With an empty old pool the mixing probability acts as 0.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0,1]")
    if not new_batch:
        raise ValueError("new_batch must be nonempty")
    lam_eff = lam if old_pool else 0.0
    rng = np.random.default_rng(seed)
    out = model.copy()
    hyper = out.hyper
    old_xn = _normalize(model, feature_cache(model, old_pool)) if old_pool else None
    new_xn = _normalize(model, feature_cache(model, new_batch))
    for _ in range(iterations):
        old_mask, old_idx, new_idx = sample_mixed_minibatch(
            rng, lam_eff, len(old_pool), len(new_batch), hyper.minibatch
        )
        scenes = [
            old_pool[oi] if m else new_batch[ni]
            for m, oi, ni in zip(old_mask, old_idx, new_idx)
        ]
        rows = [
            old_xn[oi] if m else new_xn[ni]
            for m, oi, ni in zip(old_mask, old_idx, new_idx)
        ]
        xn = np.stack(rows).reshape(-1, out.feature_dim)
        targets = _build_targets_norm(out, scenes, xn)
        loss, grads = _loss_and_grads_norm(out, xn, targets)
        _sgd_step(out, grads, hyper.lr)
        if trace is not None:
            trace.append(loss)
    return out


# ---------------------------------------------------------------------------
# evaluation


def _scene_digest(scene: Scene) -> str:
    return hashlib.blake2b(np.ascontiguousarray(scene.image).tobytes(), digest_size=8).hexdigest()


def average_precision(records: list[tuple[float, str, int, bool]], n_gt: int) -> float:
    """All-points interpolated AP from (confidence, scene digest, index, is_tp)."""
    if n_gt == 0:
        return 0.0
    if not records:
        return 0.0
    records = sorted(records, key=lambda r: (-r[0], r[1], r[2]))
    tps = np.array([r[3] for r in records], dtype=float)
    tp_cum = np.cumsum(tps)
    fp_cum = np.cumsum(1.0 - tps)
    recall = tp_cum / n_gt
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1e-12)
    # precision envelope, then area under recall steps
    for i in range(len(precision) - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    ap = 0.0
    prev_r = 0.0
    for r, p in zip(recall, precision):
        if r > prev_r:
            ap += (r - prev_r) * p
            prev_r = r
    return float(ap)


def evaluate_map(
    model: DetectorModel, test: list[Scene], iou_threshold: float = 0.5
) -> dict:
    """PASCAL-style mAP over classes with at least one ground-truth box.

    Detections are ranked by confidence across the whole test set and
    matched greedily to unmatched ground truth of the same class at
    IoU >= threshold. Ties in confidence break on a content digest, so
    the result does not depend on test-set ordering.
    """
    if not test:
        raise ValueError("test set must be nonempty")
    cfg = model.config
    k = cfg.num_classes
    # per class: list of (conf, scene_digest, det_idx, is_tp)
    records: dict[int, list[tuple[float, str, int, bool]]] = {c: [] for c in range(k)}
    n_gt = {c: 0 for c in range(k)}

    per_scene: list[tuple[str, list[Detection], list[GroundTruthBox]]] = []
    for scene in test:
        if scene.boxes is None:
            raise ValueError("evaluation scenes need annotations")
        dets = decode(forward(model, scene.image), cfg.confidence_threshold, cfg.nms_iou)
        per_scene.append((_scene_digest(scene), dets, scene.boxes))
        for b in scene.boxes:
            n_gt[b.class_id] += 1

    for c in range(k):
        pool: list[tuple[float, str, int, Detection, int]] = []
        for s_idx, (digest, dets, _) in enumerate(per_scene):
            for d_idx, det in enumerate(dets):
                if det.class_id == c:
                    pool.append((det.confidence, digest, d_idx, det, s_idx))
        pool.sort(key=lambda r: (-r[0], r[1], r[2]))
        matched: dict[int, set[int]] = {}
        recs: list[tuple[float, str, int, bool]] = []
        for conf, digest, d_idx, det, s_idx in pool:
            gts = per_scene[s_idx][2]
            used = matched.setdefault(s_idx, set())
            best_iou, best_g = 0.0, -1
            for g_idx, gt in enumerate(gts):
                if gt.class_id != c or g_idx in used:
                    continue
                iou = iou_cxcywh(det.box, (gt.cx, gt.cy, gt.w, gt.h))
                if iou > best_iou:
                    best_iou, best_g = iou, g_idx
            is_tp = best_iou >= iou_threshold and best_g >= 0
            if is_tp:
                used.add(best_g)
            recs.append((conf, digest, d_idx, is_tp))
        records[c] = recs

    per_class_ap = {
        c: average_precision(records[c], n_gt[c]) for c in range(k) if n_gt[c] > 0
    }
    mean_ap = float(np.mean(list(per_class_ap.values()))) if per_class_ap else 0.0
    return {"per_class_ap": per_class_ap, "map": mean_ap}


# ---------------------------------------------------------------------------
# persistence


def save_model(model: DetectorModel, path) -> None:
    """Binary layout: 16-byte magic, config ints (little-endian int64),
    then float64 tensors in declared order."""
    ints = (
        model.config.s_h,
        model.config.s_v,
        model.config.boxes_per_cell,
        model.config.num_classes,
        model.config.context_margin,
        model.image_size,
    )
    floats = (
        model.config.confidence_threshold,
        model.config.nms_iou,
        model.hyper.lr,
        float(model.hyper.iterations),
        float(model.hyper.minibatch),
        model.hyper.weight_decay,
    )
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<6q", *ints))
        f.write(struct.pack("<6d", *floats))
        for arr in (model.norm_mean, model.norm_std, model.w_class, model.b_class,
                    model.w_conf, model.b_conf, model.w_geom, model.b_geom):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> DetectorModel:
    with open(path, "rb") as f:
        magic = f.read(16)
        if magic != MODEL_MAGIC:
            raise ValueError("not a detector model file (bad magic)")
        s_h, s_v, b, k, margin, image_size = struct.unpack("<6q", f.read(48))
        tau, nms, lr, iters, minibatch, wd = struct.unpack("<6d", f.read(48))
        cfg = GridConfig(
            s_h=s_h, s_v=s_v, boxes_per_cell=b, num_classes=k,
            context_margin=margin, confidence_threshold=tau, nms_iou=nms,
        )
        hyper = TrainHyper(lr=lr, iterations=int(iters), minibatch=int(minibatch), weight_decay=wd)
        ph = image_size // s_v + 2 * margin
        pw = image_size // s_h + 2 * margin
        fdim = ph * pw * 3

        def read_arr(shape) -> np.ndarray:
            count = int(np.prod(shape))
            data = np.frombuffer(f.read(count * 8), dtype="<f8").astype(np.float64)
            return data.reshape(shape)

        return DetectorModel(
            config=cfg,
            image_size=image_size,
            norm_mean=read_arr((fdim,)),
            norm_std=read_arr((fdim,)),
            w_class=read_arr((k, fdim)),
            b_class=read_arr((k,)),
            w_conf=read_arr((b, fdim)),
            b_conf=read_arr((b,)),
            w_geom=read_arr((b * 4, fdim)),
            b_geom=read_arr((b * 4,)),
            hyper=hyper,
        )
