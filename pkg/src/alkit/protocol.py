"""Batch-wise active exploration with a simulated oracle.

The loop repeatedly values fixed batches of unlabeled scenes with the
frozen current model, labels the best batch, and folds it into the
model with a mixed incremental update, recording mAP checkpoints as
the labeled pool grows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .detector import DetectorModel, evaluate_map, incremental_update
from .metrics import METRIC_KINDS, value_batch, value_image
from .synthdata import GroundTruthBox, Scene


@dataclass(frozen=True)
class ExperimentConfig:
    metric: str
    new_classes: tuple[int, ...] = ()
    batch_size: int = 10
    lam: float = 0.5
    update_iterations: int = 100
    eval_every: int = 50
    seeds: tuple[int, ...] = (0,)

    def __post_init__(self) -> None:
        if self.metric not in METRIC_KINDS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass
class CurveRow:
    step: int
    labeled_count: int
    map_new: float
    map_known: float
    per_class_ap: dict[int, float]


@dataclass
class LearningCurve:
    metric: str
    seed: int
    eval_every: int
    rows: list[CurveRow] = field(default_factory=list)
    selections: list[int] = field(default_factory=list)  # chosen batch ids in order

    @property
    def labeled_counts(self) -> list[int]:
        return [r.labeled_count for r in self.rows]


def partition_unlabeled(pool, batch_size: int, seed: int) -> list[list[int]]:
    """Random fixed partition of pool indices into batches.

    A seeded permutation chunked into consecutive groups; the final
    batch may be smaller. Batch membership stays fixed for the run.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = len(pool)
    perm = np.random.default_rng(seed).permutation(n)
    return [perm[i : i + batch_size].tolist() for i in range(0, n, batch_size)]


def simulated_oracle(scene: Scene) -> list[GroundTruthBox]:
    """Stand-in annotator: returns the scene's ground truth verbatim."""
    if scene.boxes is None:
        raise ValueError("scene has no ground truth to reveal")
    return list(scene.boxes)


def select_best_batch(
    model: DetectorModel,
    pool: list[Scene],
    batches: list[list[int]],
    metric: str,
    rng: np.random.Generator | None = None,
) -> tuple[int, list[float]]:
    """Value every batch with the frozen model; argmax, ties to lowest index.

    Valuation reads only the images, never the annotations.
    """
    values = [
        value_batch([value_image(metric, model, pool[i].image, rng=rng) for i in batch])
        for batch in batches
    ]
    return int(np.argmax(values)), values


def _grouped_map(per_class_ap: dict[int, float], new_classes: set[int]) -> tuple[float, float]:
    new = [ap for c, ap in per_class_ap.items() if c in new_classes]
    known = [ap for c, ap in per_class_ap.items() if c not in new_classes]
    return (
        float(np.mean(new)) if new else 0.0,
        float(np.mean(known)) if known else 0.0,
    )


def run_exploration(
    config: ExperimentConfig,
    initial_model: DetectorModel,
    part_a: list[Scene],
    part_b: list[Scene],
    test: list[Scene],
    seed: int | None = None,
) -> LearningCurve:
    """One exploration run from a model already trained on ``part_a``.

    Loops until the unlabeled pool is exhausted: value all remaining
    batches, label the best one via the simulated oracle, update the
    model mixing old and new examples, and move the batch into the
    labeled pool. mAP checkpoints are taken whenever the labeled count
    crosses a multiple of ``eval_every``, plus one initial row.
    """
    if seed is None:
        seed = config.seeds[0]
    new_set = set(config.new_classes)
    metric_rng = np.random.default_rng([seed, 1])
    update_seeds = np.random.default_rng([seed, 2])

    batch_indices = partition_unlabeled(part_b, config.batch_size, seed)
    remaining = list(range(len(batch_indices)))
    labeled: list[Scene] = list(part_a)
    model = initial_model

    curve = LearningCurve(metric=config.metric, seed=seed, eval_every=config.eval_every)

    def snapshot(step: int) -> None:
        result = evaluate_map(model, test)
        map_new, map_known = _grouped_map(result["per_class_ap"], new_set)
        curve.rows.append(
            CurveRow(step, len(labeled), map_new, map_known, result["per_class_ap"])
        )

    snapshot(step=0)
    step = 0
    while remaining:
        step += 1
        batches = [batch_indices[b] for b in remaining]
        pick, _ = select_best_batch(model, part_b, batches, config.metric, metric_rng)
        batch_id = remaining.pop(pick)
        scenes = [part_b[i] for i in batch_indices[batch_id]]
        annotated = [
            Scene(image=s.image, boxes=simulated_oracle(s)) for s in scenes
        ]
        model = incremental_update(
            model,
            labeled,
            annotated,
            lam=config.lam,
            iterations=config.update_iterations,
            seed=int(update_seeds.integers(2**63)),
        )
        before = len(labeled)
        labeled.extend(annotated)
        curve.selections.append(batch_id)
        if len(labeled) // config.eval_every > before // config.eval_every:
            snapshot(step)
    return curve


def auc(curve: LearningCurve, curve_field: str = "map_new") -> float:
    """Trapezoidal area of a curve field over labeled count in units of
    ``eval_every`` (not normalized)."""
    if len(curve.rows) < 2:
        raise ValueError("auc needs at least two curve rows")
    if curve_field not in ("map_new", "map_known"):
        raise ValueError("curve_field must be map_new or map_known")
    x = np.array([r.labeled_count / curve.eval_every for r in curve.rows])
    y = np.array([getattr(r, curve_field) for r in curve.rows])
    return float(np.trapezoid(y, x))


# ---------------------------------------------------------------------------
# CSV persistence — stable float formatting so replays are byte-identical


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_curves(curves: list[LearningCurve], path, num_classes: int) -> None:
    header = ["method", "seed", "step", "labeled_count", "map_new", "map_known"]
    header += [f"ap_{c}" for c in range(num_classes)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for curve in curves:
            for row in curve.rows:
                record = [curve.metric, curve.seed, row.step, row.labeled_count,
                          _fmt(row.map_new), _fmt(row.map_known)]
                record += [
                    _fmt(row.per_class_ap[c]) if c in row.per_class_ap else "nan"
                    for c in range(num_classes)
                ]
                w.writerow(record)


def load_curves(path, eval_every: int = 50) -> list[LearningCurve]:
    curves: dict[tuple[str, int], LearningCurve] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        ap_cols = [c for c in reader.fieldnames or [] if c.startswith("ap_")]
        for rec in reader:
            key = (rec["method"], int(rec["seed"]))
            curve = curves.setdefault(
                key, LearningCurve(metric=key[0], seed=key[1], eval_every=eval_every)
            )
            per_class = {}
            for col in ap_cols:
                v = float(rec[col])
                if not np.isnan(v):
                    per_class[int(col[3:])] = v
            curve.rows.append(
                CurveRow(
                    step=int(rec["step"]),
                    labeled_count=int(rec["labeled_count"]),
                    map_new=float(rec["map_new"]),
                    map_known=float(rec["map_known"]),
                    per_class_ap=per_class,
                )
            )
    return list(curves.values())
