"""Deterministic generators for synthetic detection scenes and clustered
feature vectors, plus on-disk persistence for both.

Scenes are procedural: each class renders as a fixed axis-aligned shape
archetype in a fixed color, so ground-truth boxes are exact up to the
pixel grid. Object geometry is snapped to pixel edges, which keeps the
tight bounding box of every rendered mask aligned with the emitted box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

SHAPE_ARCHETYPES = ("disk", "square", "triangle", "cross", "ring", "bar", "frame", "vbar")

# bright, saturated class colors on dark backgrounds
CLASS_PALETTE = np.array(
    [
        [0.95, 0.25, 0.20],
        [0.20, 0.85, 0.30],
        [0.25, 0.45, 0.95],
        [0.95, 0.85, 0.20],
        [0.85, 0.30, 0.90],
        [0.20, 0.90, 0.90],
        [0.95, 0.60, 0.20],
        [0.75, 0.95, 0.45],
    ]
)

KIND_NAMEABLE = 0
KIND_REJECT = 1
KIND_NOISE = 2
KIND_NAMES = {KIND_NAMEABLE: "nameable", KIND_REJECT: "rejection", KIND_NOISE: "noise"}
KIND_IDS = {v: k for k, v in KIND_NAMES.items()}


@dataclass(frozen=True)
class GroundTruthBox:
    """Axis-aligned box in normalized image coordinates."""

    cx: float
    cy: float
    w: float
    h: float
    class_id: int

    def __post_init__(self) -> None:
        eps = 1e-9
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValueError(f"box extents out of (0,1]: w={self.w}, h={self.h}")
        if (
            self.cx - self.w / 2 < -eps
            or self.cx + self.w / 2 > 1.0 + eps
            or self.cy - self.h / 2 < -eps
            or self.cy + self.h / 2 > 1.0 + eps
        ):
            raise ValueError("box exceeds image bounds")

    def as_xyxy(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2, self.cx + self.w / 2, self.cy + self.h / 2)


@dataclass
class Scene:
    """A rendered image with its ground-truth boxes.

    ``boxes`` is None for scenes whose annotation is unknown (ingested
    unlabeled data); synthetic generators always attach ground truth.
    """

    image: np.ndarray
    boxes: list[GroundTruthBox] | None

    @property
    def size(self) -> int:
        return self.image.shape[0]


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of the scene generator."""

    image_size: int = 96
    class_shapes: tuple[str, ...] = ("disk", "square", "triangle", "cross", "ring")
    objects_per_scene: tuple[int, int] = (0, 4)
    object_size: tuple[float, float] = (0.12, 0.35)
    noise_sigma: float = 0.05
    background: tuple[float, float] = (0.05, 0.35)

    def __post_init__(self) -> None:
        if self.objects_per_scene[0] < 0 or self.objects_per_scene[1] < self.objects_per_scene[0]:
            raise ValueError("invalid objects_per_scene range")
        if len(self.class_shapes) > len(SHAPE_ARCHETYPES):
            raise ValueError(f"at most {len(SHAPE_ARCHETYPES)} classes supported")
        for s in self.class_shapes:
            if s not in SHAPE_ARCHETYPES:
                raise ValueError(f"unknown shape archetype: {s}")
        if len(set(self.class_shapes)) != len(self.class_shapes):
            raise ValueError("shapes must be distinct per class")

    @property
    def num_classes(self) -> int:
        return len(self.class_shapes)

    def to_dict(self) -> dict:
        return {
            "image_size": self.image_size,
            "class_shapes": list(self.class_shapes),
            "objects_per_scene": list(self.objects_per_scene),
            "object_size": list(self.object_size),
            "noise_sigma": self.noise_sigma,
            "background": list(self.background),
        }

    @staticmethod
    def from_dict(d: dict) -> "SceneSpec":
        return SceneSpec(
            image_size=int(d["image_size"]),
            class_shapes=tuple(d["class_shapes"]),
            objects_per_scene=tuple(d["objects_per_scene"]),
            object_size=tuple(d["object_size"]),
            noise_sigma=float(d["noise_sigma"]),
            background=tuple(d["background"]),
        )


def shape_mask(shape: str, box: GroundTruthBox, size: int) -> np.ndarray:
    """Boolean mask of ``shape`` drawn inside ``box`` on a size x size grid.

    A pixel belongs to the mask iff its center lies inside the shape.
    """
    xs = (np.arange(size) + 0.5) / size
    u = (xs[None, :] - (box.cx - box.w / 2)) / box.w
    v = (xs[:, None] - (box.cy - box.h / 2)) / box.h
    u = np.broadcast_to(u, (size, size))
    v = np.broadcast_to(v, (size, size))
    inside = (u >= 0) & (u <= 1) & (v >= 0) & (v <= 1)

    if shape in ("square", "bar", "vbar"):
        return inside
    if shape == "disk":
        return inside & ((2 * u - 1) ** 2 + (2 * v - 1) ** 2 <= 1.0)
    if shape == "ring":
        r2 = (2 * u - 1) ** 2 + (2 * v - 1) ** 2
        return inside & (r2 <= 1.0) & (r2 >= 0.55**2)
    if shape == "triangle":
        # keep the apex row at least one pixel wide so the rendered mask
        # spans the full annotated box even when no pixel center falls on
        # the exact tip
        w_px = max(box.w * size, 1.0)
        h_px = max(box.h * size, 1.0)
        half_width = np.maximum(0.5 * v, 0.75 / w_px)
        # the base row gets the same treatment: pixel centers on the
        # bottom row sit above v=1 where a squat triangle hasn't reached
        # full width yet, so paint that row across the whole box
        half_width = np.where(v >= 1.0 - 1.0 / h_px, 0.5, half_width)
        return inside & (np.abs(u - 0.5) <= half_width)
    if shape == "cross":
        return inside & ((np.abs(u - 0.5) <= 1 / 6) | (np.abs(v - 0.5) <= 1 / 6))
    if shape == "frame":
        hole = (np.abs(2 * u - 1) <= 0.55) & (np.abs(2 * v - 1) <= 0.55)
        return inside & ~hole
    raise ValueError(f"unknown shape archetype: {shape}")


def render_objects(spec: SceneSpec, boxes: list[GroundTruthBox], background: np.ndarray) -> np.ndarray:
    """Paint boxes onto a constant-background raster, in list order."""
    s = spec.image_size
    image = np.tile(np.asarray(background, dtype=np.float64), (s, s, 1))
    for b in boxes:
        mask = shape_mask(spec.class_shapes[b.class_id], b, s)
        image[mask] = CLASS_PALETTE[b.class_id]
    return image


def _sample_box(rng: np.random.Generator, spec: SceneSpec) -> GroundTruthBox:
    s = spec.image_size
    lo, hi = spec.object_size
    class_id = int(rng.integers(0, spec.num_classes))
    shape = spec.class_shapes[class_id]
    w_px = int(round(rng.uniform(lo, hi) * s))
    h_px = int(round(rng.uniform(lo, hi) * s))
    # squat / tall variants: the emitted box is the reshaped one
    if shape == "bar":
        h_px = max(3, int(round(0.4 * h_px)))
    elif shape == "vbar":
        w_px = max(3, int(round(0.4 * w_px)))
    w_px = min(max(w_px, 3), s)
    h_px = min(max(h_px, 3), s)
    x0 = int(rng.integers(0, s - w_px + 1))
    y0 = int(rng.integers(0, s - h_px + 1))
    return GroundTruthBox(
        cx=(x0 + w_px / 2) / s, cy=(y0 + h_px / 2) / s, w=w_px / s, h=h_px / s, class_id=class_id
    )


def generate_scene(spec: SceneSpec, seed: int) -> Scene:
    """Render one scene, deterministic in (spec, seed)."""
    rng = np.random.default_rng(seed)
    bg = rng.uniform(spec.background[0], spec.background[1], size=3)
    n = int(rng.integers(spec.objects_per_scene[0], spec.objects_per_scene[1] + 1))
    boxes = [_sample_box(rng, spec) for _ in range(n)]
    image = render_objects(spec, boxes, bg)
    if spec.noise_sigma > 0:
        image = image + rng.normal(0.0, spec.noise_sigma, size=image.shape)
    return Scene(image=np.clip(image, 0.0, 1.0), boxes=boxes)


def generate_dataset(spec: SceneSpec, n: int, seed: int) -> list[Scene]:
    """n scenes from consecutive per-scene seeds starting at ``seed``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return [generate_scene(spec, seed + i) for i in range(n)]


def split_known_new(dataset: list[Scene], new_classes: set[int]) -> tuple[list[Scene], list[Scene]]:
    """Split scenes into (part_a, part_b) by presence of a new-class box.

    part_b holds every scene containing at least one box of a class in
    ``new_classes`` (mixed scenes included); part_a holds the rest.
    """
    if not new_classes:
        raise ValueError("new_classes must be nonempty")
    observed: set[int] = set()
    for scene in dataset:
        if scene.boxes is None:
            raise ValueError("split requires annotated scenes")
        observed.update(b.class_id for b in scene.boxes)
    if observed and observed <= set(new_classes):
        raise ValueError("new_classes must be a strict subset of the class set")
    part_a: list[Scene] = []
    part_b: list[Scene] = []
    for scene in dataset:
        assert scene.boxes is not None
        if any(b.class_id in new_classes for b in scene.boxes):
            part_b.append(scene)
        else:
            part_a.append(scene)
    assert len(part_a) + len(part_b) == len(dataset)
    return part_a, part_b


@dataclass
class FeatureDataset:
    """Labeled feature vectors with a per-point label kind.

    ``labels`` holds the class id for nameable points and -1 for both
    rejection kinds. ``kinds`` distinguishes nameable points, points an
    annotator would reject as an unrelated category, and low-density
    noise points.
    """

    X: np.ndarray
    labels: np.ndarray
    kinds: np.ndarray

    def __post_init__(self) -> None:
        if self.X.ndim != 2:
            raise ValueError("X must be 2-d")
        if len(self.labels) != len(self.X) or len(self.kinds) != len(self.X):
            raise ValueError("labels/kinds length mismatch")

    def __len__(self) -> int:
        return len(self.X)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def nameable_classes(self) -> list[int]:
        return sorted(set(self.labels[self.kinds == KIND_NAMEABLE].tolist()))


def _spread_means(rng: np.random.Generator, count: int, d: int, low: float, high: float, min_dist: float) -> np.ndarray:
    means: list[np.ndarray] = []
    attempts = 0
    while len(means) < count:
        cand = rng.uniform(low, high, size=d)
        attempts += 1
        if all(np.linalg.norm(cand - m) >= min_dist for m in means) or attempts > 1000:
            means.append(cand)
    return np.array(means).reshape(count, d)


def generate_feature_clusters(
    k_classes: int,
    per_class: int,
    d: int,
    cluster_sigma: float,
    rejection_clusters: int = 0,
    noise_points: int = 0,
    seed: int = 0,
) -> FeatureDataset:
    """Gaussian blobs for nameable and rejection classes plus uniform noise.

    Nameable blobs get labels 0..k_classes-1; rejection blobs and noise
    points get label -1 with the corresponding kind. Noise is uniform
    over the bounding hypercube of all blob points, realizing a
    low-density population.
    """
    if k_classes < 0 or per_class < 0 or rejection_clusters < 0 or noise_points < 0:
        raise ValueError("counts must be >= 0")
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = np.random.default_rng(seed)
    min_dist = max(4.0 * cluster_sigma, 1.5)
    means = _spread_means(rng, k_classes + rejection_clusters, d, 0.0, 10.0, min_dist)

    xs: list[np.ndarray] = []
    labels: list[int] = []
    kinds: list[int] = []
    for c in range(k_classes):
        pts = means[c] + cluster_sigma * rng.standard_normal((per_class, d))
        xs.append(pts)
        labels += [c] * per_class
        kinds += [KIND_NAMEABLE] * per_class
    for r in range(rejection_clusters):
        pts = means[k_classes + r] + cluster_sigma * rng.standard_normal((per_class, d))
        xs.append(pts)
        labels += [-1] * per_class
        kinds += [KIND_REJECT] * per_class

    blob = np.concatenate(xs, axis=0) if xs else np.zeros((0, d))
    if noise_points > 0:
        lo = blob.min(axis=0) if len(blob) else np.zeros(d)
        hi = blob.max(axis=0) if len(blob) else np.ones(d)
        noise = rng.uniform(lo, hi, size=(noise_points, d))
        xs.append(noise)
        labels += [-1] * noise_points
        kinds += [KIND_NOISE] * noise_points

    X = np.concatenate(xs, axis=0) if xs else np.zeros((0, d))
    return FeatureDataset(X=X, labels=np.array(labels, dtype=int), kinds=np.array(kinds, dtype=int))


# ---------------------------------------------------------------------------
# persistence


def image_to_bytes(image: np.ndarray) -> bytes:
    """Encode a [0,1] float raster as lossless 8-bit RGB PNG bytes."""
    import io

    arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def image_from_bytes(data: bytes) -> np.ndarray:
    import io

    arr = np.asarray(Image.open(io.BytesIO(data)).convert("RGB"), dtype=np.float64)
    return arr / 255.0


def scene_record(scene: Scene, image_name: str) -> dict:
    boxes = None
    if scene.boxes is not None:
        boxes = [
            {"class_id": b.class_id, "cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h}
            for b in scene.boxes
        ]
    return {"image": image_name, "boxes": boxes}


def boxes_from_record(record: dict) -> list[GroundTruthBox] | None:
    if record.get("boxes") is None:
        return None
    return [
        GroundTruthBox(cx=b["cx"], cy=b["cy"], w=b["w"], h=b["h"], class_id=int(b["class_id"]))
        for b in record["boxes"]
    ]


def save_scene(scene: Scene, directory: Path, stem: str) -> tuple[Path, Path]:
    """Write <stem>.png and the <stem>.json sidecar; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    png = directory / f"{stem}.png"
    sidecar = directory / f"{stem}.json"
    png.write_bytes(image_to_bytes(scene.image))
    sidecar.write_text(json.dumps(scene_record(scene, png.name), indent=None))
    return png, sidecar


def load_scene(png_path: Path) -> Scene:
    png_path = Path(png_path)
    image = image_from_bytes(png_path.read_bytes())
    sidecar = png_path.with_suffix(".json")
    boxes = None
    if sidecar.exists():
        boxes = boxes_from_record(json.loads(sidecar.read_text()))
    return Scene(image=image, boxes=boxes)


def save_dataset(scenes: list[Scene], directory: Path, class_names: list[str], spec: SceneSpec | None) -> Path:
    """Scene files plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, scene in enumerate(scenes):
        stem = f"scene_{i:05d}"
        save_scene(scene, directory, stem)
        names.append(f"{stem}.png")
    manifest = {
        "scenes": names,
        "class_names": class_names,
        "spec": spec.to_dict() if spec is not None else None,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def load_dataset(directory: Path) -> tuple[list[Scene], list[str], SceneSpec | None]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    scenes = [load_scene(directory / name) for name in manifest["scenes"]]
    spec = SceneSpec.from_dict(manifest["spec"]) if manifest.get("spec") else None
    return scenes, list(manifest["class_names"]), spec


def save_features(ds: FeatureDataset, path: Path) -> None:
    """Delimited numeric table with a trailing label-kind column."""
    path = Path(path)
    with path.open("w") as f:
        cols = [f"x{i}" for i in range(ds.dim)] + ["label", "kind"]
        f.write(",".join(cols) + "\n")
        for row, label, kind in zip(ds.X, ds.labels, ds.kinds):
            vals = [f"{v:.17g}" for v in row] + [str(int(label)), KIND_NAMES[int(kind)]]
            f.write(",".join(vals) + "\n")


def load_features(path: Path) -> FeatureDataset:
    path = Path(path)
    with path.open() as f:
        header = f.readline().strip().split(",")
        d = len(header) - 2
        X, labels, kinds = [], [], []
        for line in f:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            X.append([float(v) for v in parts[:d]])
            labels.append(int(parts[d]))
            kinds.append(KIND_IDS[parts[d + 1]])
    return FeatureDataset(
        X=np.array(X, dtype=np.float64).reshape(len(X), d),
        labels=np.array(labels, dtype=int),
        kinds=np.array(kinds, dtype=int),
    )
