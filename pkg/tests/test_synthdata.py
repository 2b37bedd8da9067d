import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alkit import synthdata as sd


def tight_bbox(mask: np.ndarray) -> tuple[float, float, float, float]:
    """cx, cy, w, h (normalized) of the smallest box covering the mask."""
    ys, xs = np.nonzero(mask)
    size = mask.shape[0]
    x0, x1 = xs.min(), xs.max() + 1
    y0, y1 = ys.min(), ys.max() + 1
    return ((x0 + x1) / 2 / size, (y0 + y1) / 2 / size, (x1 - x0) / size, (y1 - y0) / size)


def iou(a, b) -> float:
    ax0, ay0, ax1, ay1 = a[0] - a[2] / 2, a[1] - a[3] / 2, a[0] + a[2] / 2, a[1] + a[3] / 2
    bx0, by0, bx1, by1 = b[0] - b[2] / 2, b[1] - b[3] / 2, b[0] + b[2] / 2, b[1] + b[3] / 2
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = a[2] * a[3] + b[2] * b[3] - inter
    return inter / union


class TestGenerateScene:
    def test_deterministic_bit_identical(self):
        spec = sd.SceneSpec(image_size=64)
        a = sd.generate_scene(spec, seed=11)
        b = sd.generate_scene(spec, seed=11)
        assert np.array_equal(a.image, b.image)
        assert a.boxes == b.boxes

    def test_different_seeds_differ(self):
        spec = sd.SceneSpec(image_size=64)
        a = sd.generate_scene(spec, seed=1)
        b = sd.generate_scene(spec, seed=2)
        assert not np.array_equal(a.image, b.image)

    def test_zero_objects_gives_empty_box_list(self):
        spec = sd.SceneSpec(image_size=64, objects_per_scene=(0, 0))
        scene = sd.generate_scene(spec, seed=5)
        assert scene.boxes == []

    def test_image_range_and_shape(self):
        spec = sd.SceneSpec(image_size=48)
        scene = sd.generate_scene(spec, seed=3)
        assert scene.image.shape == (48, 48, 3)
        assert scene.image.min() >= 0.0 and scene.image.max() <= 1.0

    def test_disk_pixel_count_oracle(self):
        # a disk spanning a quarter of a 96px image: mask area ~ pi/4 * 24^2
        box = sd.GroundTruthBox(cx=0.5, cy=0.5, w=0.25, h=0.25, class_id=0)
        mask = sd.shape_mask("disk", box, 96)
        area = mask.sum()
        expected = np.pi / 4 * 24 * 24
        assert abs(area - expected) < 0.15 * expected
        assert iou(tight_bbox(mask), (0.5, 0.5, 0.25, 0.25)) > 0.95

    @pytest.mark.parametrize("shape", sd.SHAPE_ARCHETYPES)
    def test_mask_tight_bbox_matches_box(self, shape):
        box = sd.GroundTruthBox(cx=0.5, cy=0.5, w=0.25, h=0.25, class_id=0)
        mask = sd.shape_mask(shape, box, 96)
        assert iou(tight_bbox(mask), (box.cx, box.cy, box.w, box.h)) >= 0.9

    @given(seed=st.integers(min_value=0, max_value=2_000))
    @settings(max_examples=60, deadline=None)
    def test_rendered_boxes_match_annotations(self, seed):
        spec = sd.SceneSpec(image_size=64)
        scene = sd.generate_scene(spec, seed=seed)
        for box in scene.boxes:
            x0, y0, x1, y1 = box.as_xyxy()
            assert 0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0
            assert 0 <= box.class_id < spec.num_classes
            mask = sd.shape_mask(spec.class_shapes[box.class_id], box, spec.image_size)
            assert iou(tight_bbox(mask), (box.cx, box.cy, box.w, box.h)) >= 0.9


class TestGenerateDataset:
    def test_counts(self):
        spec = sd.SceneSpec(image_size=48)
        assert sd.generate_dataset(spec, 0, seed=0) == []
        assert len(sd.generate_dataset(spec, 17, seed=0)) == 17

    def test_disjoint_seed_ranges_are_disjoint_streams(self):
        spec = sd.SceneSpec(image_size=48)
        a = sd.generate_dataset(spec, 3, seed=0)
        b = sd.generate_dataset(spec, 3, seed=100)
        for sa in a:
            for sb in b:
                assert not np.array_equal(sa.image, sb.image)

    def test_determinism(self):
        spec = sd.SceneSpec(image_size=48)
        a = sd.generate_dataset(spec, 5, seed=7)
        b = sd.generate_dataset(spec, 5, seed=7)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.image, sb.image)
            assert sa.boxes == sb.boxes


class TestSplitKnownNew:
    def test_partition_accounting(self):
        spec = sd.SceneSpec(image_size=48)
        dataset = sd.generate_dataset(spec, 100, seed=0)
        part_a, part_b = sd.split_known_new(dataset, {3, 4})
        assert len(part_a) + len(part_b) == 100
        for scene in part_a:
            assert all(b.class_id not in {3, 4} for b in scene.boxes)
        for scene in part_b:
            assert any(b.class_id in {3, 4} for b in scene.boxes)

    def test_empty_new_classes_rejected(self):
        spec = sd.SceneSpec(image_size=48)
        dataset = sd.generate_dataset(spec, 5, seed=0)
        with pytest.raises(ValueError):
            sd.split_known_new(dataset, set())

    def test_all_classes_new_rejected(self):
        spec = sd.SceneSpec(image_size=48)
        dataset = sd.generate_dataset(spec, 30, seed=0)
        observed = {b.class_id for s in dataset for b in s.boxes}
        with pytest.raises(ValueError):
            sd.split_known_new(dataset, observed)

    def test_unannotated_scene_rejected(self):
        scene = sd.Scene(image=np.zeros((8, 8, 3)), boxes=None)
        with pytest.raises(ValueError):
            sd.split_known_new([scene], {0})


class TestFeatureClusters:
    def test_nameable_classes(self):
        ds = sd.generate_feature_clusters(10, 20, 2, 0.3, seed=0)
        assert ds.nameable_classes == list(range(10))
        assert len(ds) == 200

    def test_pure_nameable(self):
        ds = sd.generate_feature_clusters(3, 10, 2, 0.3, rejection_clusters=0, noise_points=0, seed=1)
        assert set(ds.kinds.tolist()) == {sd.KIND_NAMEABLE}

    def test_kind_counts(self):
        ds = sd.generate_feature_clusters(4, 10, 3, 0.2, rejection_clusters=2, noise_points=7, seed=2)
        assert (ds.kinds == sd.KIND_NAMEABLE).sum() == 40
        assert (ds.kinds == sd.KIND_REJECT).sum() == 20
        assert (ds.kinds == sd.KIND_NOISE).sum() == 7
        assert (ds.labels[ds.kinds != sd.KIND_NAMEABLE] == -1).all()

    def test_sigma_zero_degenerate(self):
        ds = sd.generate_feature_clusters(2, 8, 2, 0.0, seed=3)
        for c in (0, 1):
            pts = ds.X[ds.labels == c]
            assert np.ptp(pts, axis=0).max() < 1e-12

    def test_dimension_validated(self):
        with pytest.raises(ValueError):
            sd.generate_feature_clusters(2, 5, 1, 0.3)

    def test_determinism(self):
        a = sd.generate_feature_clusters(3, 5, 2, 0.3, 1, 4, seed=9)
        b = sd.generate_feature_clusters(3, 5, 2, 0.3, 1, 4, seed=9)
        assert np.array_equal(a.X, b.X)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.kinds, b.kinds)


class TestPersistence:
    def test_png_roundtrip_idempotent(self):
        spec = sd.SceneSpec(image_size=48)
        scene = sd.generate_scene(spec, seed=4)
        data = sd.image_to_bytes(scene.image)
        again = sd.image_to_bytes(sd.image_from_bytes(data))
        assert data == again

    def test_scene_roundtrip(self, tmp_path):
        spec = sd.SceneSpec(image_size=48)
        scene = sd.generate_scene(spec, seed=8)
        png, sidecar = sd.save_scene(scene, tmp_path, "s0")
        loaded = sd.load_scene(png)
        assert loaded.boxes == scene.boxes
        assert np.abs(loaded.image - scene.image).max() <= 0.5 / 255

    def test_unlabeled_scene_roundtrip(self, tmp_path):
        scene = sd.Scene(image=np.zeros((16, 16, 3)), boxes=None)
        png, _ = sd.save_scene(scene, tmp_path, "u0")
        assert sd.load_scene(png).boxes is None

    def test_dataset_roundtrip(self, tmp_path):
        spec = sd.SceneSpec(image_size=48)
        scenes = sd.generate_dataset(spec, 6, seed=0)
        sd.save_dataset(scenes, tmp_path / "ds", ["a", "b", "c", "d", "e"], spec)
        loaded, names, spec2 = sd.load_dataset(tmp_path / "ds")
        assert names == ["a", "b", "c", "d", "e"]
        assert spec2 == spec
        assert len(loaded) == 6
        for a, b in zip(scenes, loaded):
            assert a.boxes == b.boxes

    def test_features_roundtrip_exact(self, tmp_path):
        ds = sd.generate_feature_clusters(3, 7, 4, 0.25, 1, 5, seed=6)
        path = tmp_path / "feats.csv"
        sd.save_features(ds, path)
        loaded = sd.load_features(path)
        assert np.array_equal(loaded.X, ds.X)
        assert np.array_equal(loaded.labels, ds.labels)
        assert np.array_equal(loaded.kinds, ds.kinds)
