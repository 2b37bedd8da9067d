"""Annotation project state: pools, proposals, labels, training, persistence.

A project lives in one directory:

    manifest.json   pools, class registry, settings, curve, pending batch
    model.bin       current detector weights
    events.log      append-only JSON lines with monotone sequence numbers
    scenes/         <id>.png raster + <id>.json ground-truth sidecar

Every mutating operation appends its event and rewrites the manifest
atomically (tmp file + rename) before returning, so a crash between
operations always reloads to the last acknowledged state.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import detector as det
from . import synthdata as sd
from .metrics import METRIC_KINDS, value_batch, value_image
from .protocol import partition_unlabeled

MANIFEST_VERSION = 1

UNLABELED = "unlabeled"
STAGED = "staged"
LABELED = "labeled"


class ProjectError(Exception):
    """Service-level failure with an HTTP-ready code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad(code: str, message: str) -> ProjectError:
    return ProjectError(400, code, message)


@dataclass
class SceneEntry:
    scene_id: str
    status: str  # unlabeled | staged | labeled
    boxes: list[sd.GroundTruthBox] | None


@dataclass
class PendingBatch:
    batch_id: str
    image_ids: list[str]
    proposals: dict[str, dict]  # proposal_id -> {image_id, box, class_id, ...}
    image_values: dict[str, float]
    batch_value: float


def _atomic_write(path: Path, data: str | bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    if isinstance(data, str):
        tmp.write_text(data)
    else:
        tmp.write_bytes(data)
    os.replace(tmp, path)


@dataclass
class Project:
    directory: Path
    project_id: str
    class_names: list[str]
    metric: str
    lam: float
    update_iterations: int
    batch_size: int
    image_size: int
    model: det.DetectorModel
    scenes: dict[str, SceneEntry] = field(default_factory=dict)
    curve: list[dict] = field(default_factory=list)
    pending: PendingBatch | None = None
    event_seq: int = 0
    propose_count: int = 0
    busy: bool = field(default=False, compare=False)
    lock: threading.RLock = field(default_factory=threading.RLock, compare=False)

    # ----- derived state -------------------------------------------------

    def pool_counts(self) -> dict[str, int]:
        counts = {UNLABELED: 0, STAGED: 0, LABELED: 0}
        for entry in self.scenes.values():
            counts[entry.status] += 1
        return counts

    def _ids_with_status(self, status: str) -> list[str]:
        return sorted(i for i, e in self.scenes.items() if e.status == status)

    def _scene(self, scene_id: str) -> sd.Scene:
        return sd.load_scene(self.directory / "scenes" / f"{scene_id}.png")

    def state_digest(self) -> str:
        """Hash of everything persisted: pools, labels, registry, model, curve."""
        h = hashlib.blake2b(digest_size=16)
        state = {
            "id": self.project_id,
            "classes": self.class_names,
            "metric": self.metric,
            "lam": self.lam,
            "update_iterations": self.update_iterations,
            "batch_size": self.batch_size,
            "image_size": self.image_size,
            "event_seq": self.event_seq,
            "propose_count": self.propose_count,
            "curve": self.curve,
            "pending": self._pending_record(),
            "scenes": {
                i: {
                    "status": e.status,
                    "boxes": None
                    if e.boxes is None
                    else [[b.class_id, b.cx, b.cy, b.w, b.h] for b in e.boxes],
                }
                for i, e in sorted(self.scenes.items())
            },
        }
        h.update(json.dumps(state, sort_keys=True).encode())
        h.update(self.model.weights_digest().encode())
        return h.hexdigest()

    def info(self) -> dict:
        return {
            "id": self.project_id,
            "class_names": list(self.class_names),
            "metric": self.metric,
            "lambda": self.lam,
            "update_iterations": self.update_iterations,
            "batch_size": self.batch_size,
            "image_size": self.image_size,
            "pool": self.pool_counts(),
            "busy": self.busy,
            "pending_batch_id": self.pending.batch_id if self.pending else None,
            "digest": self.state_digest(),
        }

    # ----- persistence ----------------------------------------------------

    def _pending_record(self) -> dict | None:
        if self.pending is None:
            return None
        return {
            "batch_id": self.pending.batch_id,
            "image_ids": self.pending.image_ids,
            "proposals": self.pending.proposals,
            "image_values": self.pending.image_values,
            "batch_value": self.pending.batch_value,
        }

    def _manifest(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "id": self.project_id,
            "class_names": self.class_names,
            "metric": self.metric,
            "lambda": self.lam,
            "update_iterations": self.update_iterations,
            "batch_size": self.batch_size,
            "image_size": self.image_size,
            "event_seq": self.event_seq,
            "propose_count": self.propose_count,
            "curve": self.curve,
            "pending": self._pending_record(),
            "scenes": {i: e.status for i, e in sorted(self.scenes.items())},
        }

    def _persist(self) -> None:
        det.save_model(self.model, self.directory / "model.bin.tmp")
        os.replace(self.directory / "model.bin.tmp", self.directory / "model.bin")
        _atomic_write(self.directory / "manifest.json", json.dumps(self._manifest(), indent=1))

    def _append_event(self, kind: str, data: dict) -> None:
        self.event_seq += 1
        record = {"seq": self.event_seq, "ts": time.time(), "kind": kind, "data": data}
        with open(self.directory / "events.log", "a") as f:
            f.write(json.dumps(record) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def _write_sidecar(self, scene_id: str) -> None:
        entry = self.scenes[scene_id]
        record = {
            "image": f"{scene_id}.png",
            "boxes": None
            if entry.boxes is None
            else [
                {"class_id": b.class_id, "cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h}
                for b in entry.boxes
            ],
        }
        _atomic_write(self.directory / "scenes" / f"{scene_id}.json", json.dumps(record))

    # ----- operations -----------------------------------------------------

    def ingest(self, files: list[tuple[str, bytes]]) -> int:
        """Add scenes from (filename, content) pairs; returns newly added count.

        A scene is a PNG, optionally paired (by stem) with a JSON sidecar
        carrying ground truth. Validation happens before any state change,
        and duplicates (by raster content hash) are skipped.
        """
        pngs: dict[str, bytes] = {}
        sidecars: dict[str, dict] = {}
        for name, content in files:
            stem, _, ext = name.rpartition(".")
            if ext.lower() == "png":
                try:
                    img = sd.image_from_bytes(content)
                except Exception as exc:
                    raise _bad("bad_scene_file", f"{name}: not a readable raster ({exc})")
                if img.shape[0] != self.image_size or img.shape[1] != self.image_size:
                    raise _bad(
                        "bad_scene_file",
                        f"{name}: size {img.shape[1]}x{img.shape[0]} != project size {self.image_size}",
                    )
                pngs[stem] = content
            elif ext.lower() == "json":
                try:
                    sidecars[stem] = json.loads(content.decode())
                except Exception as exc:
                    raise _bad("bad_scene_file", f"{name}: invalid JSON ({exc})")
            else:
                raise _bad("bad_scene_file", f"{name}: expected .png or .json")
        for stem in sidecars:
            if stem not in pngs:
                raise _bad("bad_scene_file", f"{stem}.json: sidecar without matching .png")

        staged_entries: list[tuple[str, bytes, list[sd.GroundTruthBox] | None]] = []
        for stem, content in pngs.items():
            boxes = None
            if stem in sidecars:
                try:
                    boxes = sd.boxes_from_record(sidecars[stem])
                except Exception as exc:
                    raise _bad("bad_scene_file", f"{stem}.json: bad box record ({exc})")
                for b in boxes or []:
                    if b.class_id >= len(self.class_names):
                        raise _bad("unknown_class", f"{stem}.json: class {b.class_id} not registered")
            scene_id = hashlib.blake2b(content, digest_size=12).hexdigest()
            staged_entries.append((scene_id, content, boxes))

        added = 0
        with self.lock:
            scenes_dir = self.directory / "scenes"
            scenes_dir.mkdir(exist_ok=True)
            new_ids = []
            for scene_id, content, boxes in staged_entries:
                if scene_id in self.scenes:
                    continue
                _atomic_write(scenes_dir / f"{scene_id}.png", content)
                self.scenes[scene_id] = SceneEntry(scene_id, UNLABELED, boxes)
                self._write_sidecar(scene_id)
                new_ids.append(scene_id)
                added += 1
            self._append_event("data_ingested", {"count": added, "ids": new_ids})
            self._persist()
        return added

    def propose_batch(self) -> dict:
        """Partition the unlabeled pool, value every batch with the current
        model, and stage the best batch's decoded proposals for review.

        Read-only with respect to pools and model; replaces any previous
        unsubmitted batch.
        """
        with self.lock:
            if self.busy:
                raise ProjectError(409, "busy", "training in progress")
            unlabeled = self._ids_with_status(UNLABELED)
            if not unlabeled:
                raise _bad("empty_pool", "no unlabeled scenes to select from")
            self.propose_count += 1
            seed = self.propose_count
            images = {i: self._scene(i).image for i in unlabeled}
            batches = partition_unlabeled(unlabeled, self.batch_size, seed)
            rng = np.random.default_rng([seed, 1])
            cfg = self.model.config
            per_image = [
                [value_image(self.metric, self.model, images[unlabeled[i]], rng=rng) for i in batch]
                for batch in batches
            ]
            values = [value_batch(v) for v in per_image]
            best = int(np.argmax(values))
            chosen = [unlabeled[i] for i in batches[best]]
            image_values = dict(zip(chosen, per_image[best]))

            batch_id = f"b{self.propose_count:06d}"
            proposals: dict[str, dict] = {}
            for img_id in chosen:
                grid = det.forward(self.model, images[img_id])
                dets = det.decode(grid, cfg.confidence_threshold, cfg.nms_iou)
                for k, d in enumerate(dets):
                    pid = f"{batch_id}-{img_id[:8]}-{k}"
                    proposals[pid] = {
                        "proposal_id": pid,
                        "image_id": img_id,
                        "box": {"cx": d.box[0], "cy": d.box[1], "w": d.box[2], "h": d.box[3]},
                        "class_id": d.class_id,
                        "class_name": self.class_names[d.class_id],
                        "confidence": d.confidence,
                        "class_distribution": [float(p) for p in d.class_distribution],
                    }
            self.pending = PendingBatch(
                batch_id=batch_id,
                image_ids=chosen,
                proposals=proposals,
                image_values=image_values,
                batch_value=float(sum(image_values.values())),
            )
            self._append_event("batch_proposed", {"batch_id": batch_id, "image_ids": chosen})
            self._persist()
            return self.selection_result()

    def selection_result(self) -> dict:
        if self.pending is None:
            raise ProjectError(404, "no_batch", "no batch has been proposed")
        by_image: dict[str, list[dict]] = {i: [] for i in self.pending.image_ids}
        for p in self.pending.proposals.values():
            by_image[p["image_id"]].append(p)
        return {
            "batch_id": self.pending.batch_id,
            "batch_value": self.pending.batch_value,
            "images": [
                {
                    "image_id": i,
                    "value": self.pending.image_values[i],
                    "proposals": sorted(by_image[i], key=lambda p: p["proposal_id"]),
                }
                for i in self.pending.image_ids
            ],
        }

    def _sanitize_box(self, cx: float, cy: float, w: float, h: float, class_id: int) -> sd.GroundTruthBox:
        # proposals may decode to degenerate geometry; clamp to a legal box
        min_side = 1.0 / self.image_size
        w = float(np.clip(w, min_side, 1.0))
        h = float(np.clip(h, min_side, 1.0))
        cx = float(np.clip(cx, w / 2, 1 - w / 2))
        cy = float(np.clip(cy, h / 2, 1 - h / 2))
        return sd.GroundTruthBox(cx=cx, cy=cy, w=w, h=h, class_id=class_id)

    def _resolve_class(self, decision: dict, registered: list[str]) -> int:
        """Existing class id, or registers a new class by name."""
        cid = decision.get("class_id")
        name = decision.get("new_class_name")
        if (cid is None) == (name is None):
            raise _bad("bad_decision", "reassign needs exactly one of class_id / new_class_name")
        if cid is not None:
            if not isinstance(cid, int) or not 0 <= cid < len(self.class_names) + len(registered):
                raise _bad("unknown_class", f"class id {cid!r} is not registered")
            return cid
        name = str(name).strip()
        if not name:
            raise _bad("bad_decision", "new class name must be nonempty")
        if name in self.class_names:
            return self.class_names.index(name)
        if name in registered:
            return len(self.class_names) + registered.index(name)
        registered.append(name)
        return len(self.class_names) + len(registered) - 1

    def submit_labels(self, batch_id: str, decisions: list[dict], added_boxes: list[dict]) -> dict:
        """Apply one decision per proposal plus manual boxes; stage the batch.

        Confirmed and reassigned proposals keep their geometry verbatim;
        a fully rejected image becomes a confirmed-empty labeled scene.
        Validation is all-or-nothing: any bad input leaves state untouched.
        """
        with self.lock:
            if self.busy:
                raise ProjectError(409, "busy", "training in progress")
            if self.pending is None:
                raise ProjectError(409, "stale_batch", "no batch is awaiting labels")
            if batch_id != self.pending.batch_id:
                raise ProjectError(409, "stale_batch", f"batch {batch_id!r} is not the pending batch")

            seen: set[str] = set()
            new_names: list[str] = []
            resolved: list[tuple[dict, str, int | None]] = []  # (proposal, action, class_id)
            for d in decisions:
                pid = d.get("proposal_id")
                if pid not in self.pending.proposals:
                    raise _bad("bad_decision", f"unknown proposal id {pid!r}")
                if pid in seen:
                    raise _bad("bad_decision", f"duplicate decision for proposal {pid!r}")
                seen.add(pid)
                action = d.get("action")
                if action == "confirm":
                    resolved.append((self.pending.proposals[pid], action, None))
                elif action == "reject":
                    resolved.append((self.pending.proposals[pid], action, None))
                elif action == "reassign":
                    resolved.append((self.pending.proposals[pid], action, self._resolve_class(d, new_names)))
                else:
                    raise _bad("bad_decision", f"unknown action {action!r}")
            missing = set(self.pending.proposals) - seen
            if missing:
                raise _bad("missing_decisions", f"{len(missing)} proposals lack a decision")

            extra: dict[str, list[sd.GroundTruthBox]] = {}
            n_classes = len(self.class_names) + len(new_names)
            for b in added_boxes:
                img = b.get("image_id")
                if img not in self.pending.image_ids:
                    raise _bad("bad_box", f"image {img!r} is not in the pending batch")
                cid = b.get("class_id")
                if not isinstance(cid, int) or not 0 <= cid < n_classes:
                    raise _bad("unknown_class", f"class id {cid!r} is not registered")
                try:
                    box = self._sanitize_box(float(b["cx"]), float(b["cy"]), float(b["w"]), float(b["h"]), cid)
                except (KeyError, TypeError, ValueError) as exc:
                    raise _bad("bad_box", f"invalid box geometry: {exc}")
                extra.setdefault(img, []).append(box)

            # validation passed — apply
            for name in new_names:
                self.class_names.append(name)
                self.model = grow_model_classes(self.model, len(self.class_names))
                self._append_event("class_added", {"name": name, "class_id": self.class_names.index(name)})

            labels: dict[str, list[sd.GroundTruthBox]] = {i: [] for i in self.pending.image_ids}
            accepted = 0
            for proposal, action, new_cid in resolved:
                if action == "reject":
                    continue
                cid = proposal["class_id"] if action == "confirm" else new_cid
                box = proposal["box"]
                labels[proposal["image_id"]].append(
                    self._sanitize_box(box["cx"], box["cy"], box["w"], box["h"], cid)
                )
                accepted += 1
            for img, boxes in extra.items():
                labels[img].extend(boxes)
                accepted += len(boxes)

            for img_id in self.pending.image_ids:
                entry = self.scenes[img_id]
                entry.boxes = labels[img_id]
                entry.status = STAGED
                self._write_sidecar(img_id)
            self._append_event(
                "labels_submitted",
                {
                    "batch_id": batch_id,
                    "decisions": [
                        {"proposal_id": p["proposal_id"], "action": a, "class_id": c}
                        for p, a, c in resolved
                    ],
                    "added_boxes": len(added_boxes),
                },
            )
            self.pending = None
            self._persist()
            return {"accepted": accepted, "staged_images": len(labels)}

    def train(self, seed: int | None = None) -> dict:
        """Mixed incremental update over (labeled pool, staged batch).

        Runs to completion; the busy flag is held so concurrent calls get
        a 409. The staged batch merges into the labeled pool afterwards.
        """
        with self.lock:
            if self.busy:
                raise ProjectError(409, "busy", "training already in progress")
            staged_ids = self._ids_with_status(STAGED)
            if not staged_ids:
                raise _bad("nothing_staged", "no staged labels; submit a batch first")
            self.busy = True
            labeled_ids = self._ids_with_status(LABELED)
        try:
            old_pool = [
                sd.Scene(image=self._scene(i).image, boxes=self.scenes[i].boxes) for i in labeled_ids
            ]
            new_batch = [
                sd.Scene(image=self._scene(i).image, boxes=self.scenes[i].boxes) for i in staged_ids
            ]
            trace: list[float] = []
            started = time.time()
            train_seed = self.event_seq if seed is None else seed
            if old_pool:
                model = det.incremental_update(
                    self.model,
                    old_pool,
                    new_batch,
                    lam=self.lam,
                    iterations=self.update_iterations,
                    seed=train_seed,
                    trace=trace,
                )
            else:
                # first round: nothing labeled yet, so this is the initial
                # fit — normalization stats come from the first batch
                hyper = replace(self.model.hyper, iterations=self.update_iterations)
                model = det.train_initial(
                    self.model, new_batch, hyper, seed=train_seed, trace=trace
                )
            duration = time.time() - started
            labeled_after = old_pool + new_batch
            eval_result = det.evaluate_map(model, labeled_after)
            with self.lock:
                self.model = model
                for i in staged_ids:
                    self.scenes[i].status = LABELED
                head = trace[: max(1, len(trace) // 10)]
                tail = trace[-max(1, len(trace) // 10) :]
                row = {
                    "step": len(self.curve) + 1,
                    "labeled_count": len(labeled_after),
                    "map_labeled": eval_result["map"],
                    "loss_first": float(np.mean(head)),
                    "loss_last": float(np.mean(tail)),
                    "duration_s": duration,
                }
                self.curve.append(row)
                self._append_event(
                    "train_finished",
                    {"labeled_count": row["labeled_count"], "iterations": len(trace)},
                )
                self._persist()
                return {
                    "duration_s": duration,
                    "iterations": len(trace),
                    "loss_first": row["loss_first"],
                    "loss_last": row["loss_last"],
                    "curve_row": row,
                }
        finally:
            with self.lock:
                self.busy = False

    def metrics(self) -> dict:
        return {"curve": list(self.curve), "pool": self.pool_counts()}

    def image_bytes(self, image_id: str) -> bytes:
        if image_id not in self.scenes:
            raise ProjectError(404, "unknown_image", f"no image {image_id!r}")
        return (self.directory / "scenes" / f"{image_id}.png").read_bytes()


def grow_model_classes(model: det.DetectorModel, new_k: int) -> det.DetectorModel:
    """Extend the class head with zero-weight rows for fresh classes."""
    k, fdim = model.w_class.shape
    if new_k < k:
        raise ValueError("cannot shrink the class head")
    if new_k == k:
        return model
    out = model.copy()
    out.w_class = np.vstack([model.w_class, np.zeros((new_k - k, fdim))])
    out.b_class = np.append(model.b_class, np.zeros(new_k - k))
    cfg = model.config
    out.config = det.GridConfig(
        s_h=cfg.s_h,
        s_v=cfg.s_v,
        boxes_per_cell=cfg.boxes_per_cell,
        num_classes=new_k,
        context_margin=cfg.context_margin,
        confidence_threshold=cfg.confidence_threshold,
        nms_iou=cfg.nms_iou,
    )
    return out


def create_project(
    directory: Path,
    class_names: list[str] | None = None,
    metric: str = "sum",
    image_size: int = 48,
    grid: det.GridConfig | None = None,
    lam: float = 0.5,
    update_iterations: int = 100,
    batch_size: int = 10,
    hyper: det.TrainHyper | None = None,
) -> Project:
    directory = Path(directory)
    if (directory / "manifest.json").exists():
        raise _bad("exists", f"{directory} already holds a project")
    if metric not in METRIC_KINDS:
        raise _bad("bad_metric", f"metric must be one of {METRIC_KINDS}")
    class_names = list(class_names or [f"class_{i}" for i in range(5)])
    if len(class_names) != len(set(class_names)) or not class_names:
        raise _bad("bad_classes", "class names must be nonempty and unique")
    grid = grid or det.GridConfig(num_classes=len(class_names))
    if grid.num_classes != len(class_names):
        raise _bad("bad_classes", "grid num_classes must match the class registry")
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "scenes").mkdir(exist_ok=True)
    model = det.initialize_model(grid, image_size, hyper or det.TrainHyper())
    project = Project(
        directory=directory,
        project_id=uuid.uuid4().hex[:12],
        class_names=class_names,
        metric=metric,
        lam=lam,
        update_iterations=update_iterations,
        batch_size=batch_size,
        image_size=image_size,
        model=model,
    )
    project._append_event("project_created", {"id": project.project_id})
    project._persist()
    return project


def load_project(directory: Path) -> Project:
    """Rebuild the exact persisted state from a project directory."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ProjectError(404, "not_found", f"{directory} is not a project (no manifest)")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise _bad("corrupt_manifest", f"manifest unreadable: {exc}")
    if manifest.get("version") != MANIFEST_VERSION:
        raise _bad("version_mismatch", f"manifest version {manifest.get('version')!r} unsupported")
    model = det.load_model(directory / "model.bin")
    scenes: dict[str, SceneEntry] = {}
    for scene_id, status in manifest["scenes"].items():
        sidecar = directory / "scenes" / f"{scene_id}.json"
        boxes = None
        if sidecar.exists():
            boxes = sd.boxes_from_record(json.loads(sidecar.read_text()))
        scenes[scene_id] = SceneEntry(scene_id, status, boxes)
    pending = None
    if manifest.get("pending"):
        p = manifest["pending"]
        pending = PendingBatch(
            batch_id=p["batch_id"],
            image_ids=p["image_ids"],
            proposals=p["proposals"],
            image_values={k: float(v) for k, v in p["image_values"].items()},
            batch_value=float(p["batch_value"]),
        )
    return Project(
        directory=directory,
        project_id=manifest["id"],
        class_names=list(manifest["class_names"]),
        metric=manifest["metric"],
        lam=float(manifest["lambda"]),
        update_iterations=int(manifest["update_iterations"]),
        batch_size=int(manifest["batch_size"]),
        image_size=int(manifest["image_size"]),
        model=model,
        scenes=scenes,
        curve=list(manifest["curve"]),
        pending=pending,
        event_seq=int(manifest["event_seq"]),
        propose_count=int(manifest.get("propose_count", 0)),
    )
