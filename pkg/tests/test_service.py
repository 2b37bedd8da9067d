"""Tests for annotation projects and the HTTP service over them:
ingest validation and dedup, batch proposal, label submission, the
train/metrics cycle, persistence digests across reloads, and the wire
format including error bodies."""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from alkit.detector import GridConfig
from alkit.metrics import value_image
from alkit.project import (
    ProjectError,
    create_project,
    grow_model_classes,
    load_project,
)
from alkit.protocol import partition_unlabeled
from alkit.service import create_app
from alkit.synthdata import SceneSpec, generate_dataset, image_to_bytes, scene_record


SPEC = SceneSpec(
    image_size=48,
    class_shapes=("disk", "square", "triangle"),
    objects_per_scene=(1, 2),
)


def scene_files(n, seed=0, with_sidecars=False):
    """(filename, bytes) upload pairs from generated scenes."""
    scenes = generate_dataset(SPEC, n, seed=seed)
    files = []
    for i, s in enumerate(scenes):
        name = f"scene_{seed}_{i:03d}"
        files.append((f"{name}.png", image_to_bytes(s.image)))
        if with_sidecars:
            record = scene_record(s, f"{name}.png")
            files.append((f"{name}.json", json.dumps(record).encode()))
    return files


def fresh_project(tmp_path, **kw):
    kw.setdefault("class_names", ["disk", "square", "triangle"])
    kw.setdefault("grid", GridConfig(s_h=4, s_v=4, num_classes=3))
    kw.setdefault("image_size", 48)
    kw.setdefault("batch_size", 5)
    kw.setdefault("update_iterations", 5)
    return create_project(tmp_path / "proj", **kw)


def confirm_all(project):
    """Submit the pending batch confirming every proposal."""
    result = project.selection_result()
    decisions = [
        {"proposal_id": p["proposal_id"], "action": "confirm"}
        for img in result["images"]
        for p in img["proposals"]
    ]
    return project.submit_labels(result["batch_id"], decisions, [])


class TestCreateAndLoad:
    def test_create_persists_and_reloads_identically(self, tmp_path):
        project = fresh_project(tmp_path)
        reloaded = load_project(project.directory)
        assert reloaded.state_digest() == project.state_digest()
        assert reloaded.class_names == ["disk", "square", "triangle"]

    def test_create_twice_rejected(self, tmp_path):
        fresh_project(tmp_path)
        with pytest.raises(ProjectError) as err:
            create_project(tmp_path / "proj")
        assert err.value.code == "exists"

    def test_load_missing_directory(self, tmp_path):
        with pytest.raises(ProjectError) as err:
            load_project(tmp_path / "nothing")
        assert err.value.status == 404

    def test_distinct_ids(self, tmp_path):
        a = create_project(tmp_path / "a")
        b = create_project(tmp_path / "b")
        assert a.project_id != b.project_id

    def test_bad_metric_rejected(self, tmp_path):
        with pytest.raises(ProjectError) as err:
            create_project(tmp_path / "x", metric="entropy")
        assert err.value.code == "bad_metric"

    def test_duplicate_class_names_rejected(self, tmp_path):
        with pytest.raises(ProjectError):
            create_project(tmp_path / "x", class_names=["a", "a"])


class TestIngest:
    def test_adds_scenes(self, tmp_path):
        project = fresh_project(tmp_path)
        assert project.ingest(scene_files(8)) == 8
        assert project.pool_counts() == {"unlabeled": 8, "staged": 0, "labeled": 0}

    def test_reingest_is_idempotent(self, tmp_path):
        project = fresh_project(tmp_path)
        files = scene_files(5)
        assert project.ingest(files) == 5
        assert project.ingest(files) == 0
        assert project.pool_counts()["unlabeled"] == 5

    def test_sidecar_boxes_kept(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(3, with_sidecars=True))
        entries = list(project.scenes.values())
        assert all(e.status == "unlabeled" for e in entries)
        assert any(e.boxes for e in entries)

    def test_invalid_file_rolls_back_everything(self, tmp_path):
        project = fresh_project(tmp_path)
        files = scene_files(4) + [("broken.png", b"not a png")]
        with pytest.raises(ProjectError) as err:
            project.ingest(files)
        assert err.value.code == "bad_scene_file"
        assert "broken.png" in err.value.message
        assert project.pool_counts()["unlabeled"] == 0

    def test_wrong_size_rejected(self, tmp_path):
        project = fresh_project(tmp_path)
        big = generate_dataset(SceneSpec(image_size=96), 1, seed=0)[0]
        with pytest.raises(ProjectError) as err:
            project.ingest([("big.png", image_to_bytes(big.image))])
        assert "96x96" in err.value.message

    def test_orphan_sidecar_rejected(self, tmp_path):
        project = fresh_project(tmp_path)
        with pytest.raises(ProjectError):
            project.ingest([("ghost.json", b"{}")])

    def test_unregistered_class_in_sidecar(self, tmp_path):
        project = fresh_project(tmp_path)
        record = {"image": "x.png", "boxes": [
            {"class_id": 9, "cx": 0.5, "cy": 0.5, "w": 0.2, "h": 0.2}
        ]}
        png = scene_files(1)[0][1]
        with pytest.raises(ProjectError) as err:
            project.ingest([("x.png", png), ("x.json", json.dumps(record).encode())])
        assert err.value.code == "unknown_class"


class TestProposeBatch:
    def test_empty_pool(self, tmp_path):
        project = fresh_project(tmp_path)
        with pytest.raises(ProjectError) as err:
            project.propose_batch()
        assert err.value.code == "empty_pool"

    def test_batch_shape_and_values(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(12))
        result = project.propose_batch()
        assert len(result["images"]) == 5
        total = sum(img["value"] for img in result["images"])
        assert result["batch_value"] == pytest.approx(total)
        for img in result["images"]:
            for p in img["proposals"]:
                assert p["image_id"] == img["image_id"]
                assert 0 <= p["class_id"] < 3
                assert set(p["box"]) == {"cx", "cy", "w", "h"}

    def test_selection_matches_external_valuation(self, tmp_path):
        # recompute the whole valuation with library calls and check the
        # service picked the argmax batch (deterministic metric)
        project = fresh_project(tmp_path, metric="sum")
        project.ingest(scene_files(12))
        result = project.propose_batch()
        unlabeled = sorted(project.scenes)
        batches = partition_unlabeled(unlabeled, 5, seed=1)
        values = []
        for batch in batches:
            v = 0.0
            for i in batch:
                scene = project._scene(unlabeled[i])
                v += value_image("sum", project.model, scene.image)
            values.append(v)
        best = int(np.argmax(values))
        expected_ids = [unlabeled[i] for i in batches[best]]
        assert [img["image_id"] for img in result["images"]] == expected_ids
        assert result["batch_value"] == pytest.approx(values[best])

    def test_no_pending_batch_404(self, tmp_path):
        project = fresh_project(tmp_path)
        with pytest.raises(ProjectError) as err:
            project.selection_result()
        assert err.value.status == 404

    def test_repropose_invalidates_previous(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(12))
        first = project.propose_batch()
        second = project.propose_batch()
        assert first["batch_id"] != second["batch_id"]
        with pytest.raises(ProjectError) as err:
            project.submit_labels(first["batch_id"], [], [])
        assert err.value.code == "stale_batch"


class TestSubmitLabels:
    def test_confirm_all_stages_batch(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        project.propose_batch()
        out = confirm_all(project)
        assert out["staged_images"] == 5
        counts = project.pool_counts()
        assert counts == {"unlabeled": 3, "staged": 5, "labeled": 0}
        assert project.pending is None

    def test_missing_decision_changes_nothing(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        digest = project.state_digest()
        pids = [p["proposal_id"] for img in result["images"] for p in img["proposals"]]
        decisions = [{"proposal_id": p, "action": "confirm"} for p in pids[:-1]]
        with pytest.raises(ProjectError) as err:
            project.submit_labels(result["batch_id"], decisions, [])
        assert err.value.code == "missing_decisions"
        assert project.state_digest() == digest
        assert project.pending is not None

    def test_unknown_action_rejected(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        pid = result["images"][0]["proposals"][0]["proposal_id"]
        with pytest.raises(ProjectError) as err:
            project.submit_labels(result["batch_id"], [{"proposal_id": pid, "action": "keep"}], [])
        assert err.value.code == "bad_decision"

    def test_duplicate_decision_rejected(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        pid = result["images"][0]["proposals"][0]["proposal_id"]
        dup = [
            {"proposal_id": pid, "action": "confirm"},
            {"proposal_id": pid, "action": "reject"},
        ]
        with pytest.raises(ProjectError) as err:
            project.submit_labels(result["batch_id"], dup, [])
        assert err.value.code == "bad_decision"

    def test_reject_all_yields_confirmed_empty(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        decisions = [
            {"proposal_id": p["proposal_id"], "action": "reject"}
            for img in result["images"]
            for p in img["proposals"]
        ]
        project.submit_labels(result["batch_id"], decisions, [])
        staged = [e for e in project.scenes.values() if e.status == "staged"]
        assert len(staged) == 5
        assert all(e.boxes == [] for e in staged)

    def test_reassign_to_new_class_grows_model(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        pids = [p["proposal_id"] for img in result["images"] for p in img["proposals"]]
        decisions = [{"proposal_id": p, "action": "confirm"} for p in pids[1:]]
        decisions.append(
            {"proposal_id": pids[0], "action": "reassign", "new_class_name": "ring"}
        )
        project.submit_labels(result["batch_id"], decisions, [])
        assert project.class_names[-1] == "ring"
        assert project.model.config.num_classes == 4
        assert project.model.w_class.shape[0] == 4

    def test_reassign_requires_exactly_one_target(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        pids = [p["proposal_id"] for img in result["images"] for p in img["proposals"]]
        bad = [{"proposal_id": pids[0], "action": "reassign",
                "class_id": 1, "new_class_name": "ring"}]
        bad += [{"proposal_id": p, "action": "confirm"} for p in pids[1:]]
        with pytest.raises(ProjectError) as err:
            project.submit_labels(result["batch_id"], bad, [])
        assert err.value.code == "bad_decision"

    def test_added_box_outside_batch_rejected(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        decisions = [
            {"proposal_id": p["proposal_id"], "action": "confirm"}
            for img in result["images"]
            for p in img["proposals"]
        ]
        outside = [i for i in project.scenes if i not in
                   {img["image_id"] for img in result["images"]}][0]
        box = {"image_id": outside, "class_id": 0, "cx": 0.5, "cy": 0.5, "w": 0.2, "h": 0.2}
        with pytest.raises(ProjectError) as err:
            project.submit_labels(result["batch_id"], decisions, [box])
        assert err.value.code == "bad_box"

    def test_added_box_is_stored(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        target = result["images"][0]["image_id"]
        decisions = [
            {"proposal_id": p["proposal_id"], "action": "reject"}
            for img in result["images"]
            for p in img["proposals"]
        ]
        box = {"image_id": target, "class_id": 2, "cx": 0.4, "cy": 0.6, "w": 0.25, "h": 0.2}
        project.submit_labels(result["batch_id"], decisions, [box])
        entry = project.scenes[target]
        assert len(entry.boxes) == 1
        assert entry.boxes[0].class_id == 2
        assert entry.boxes[0].cx == pytest.approx(0.4)


class TestTrain:
    def test_nothing_staged(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        with pytest.raises(ProjectError) as err:
            project.train()
        assert err.value.code == "nothing_staged"

    def test_train_cycle(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        project.propose_batch()
        confirm_all(project)
        before = project.state_digest()
        out = project.train()
        assert out["iterations"] == 5
        assert project.state_digest() != before
        counts = project.pool_counts()
        assert counts == {"unlabeled": 3, "staged": 0, "labeled": 5}
        assert len(project.curve) == 1
        row = project.curve[0]
        assert row["labeled_count"] == 5
        assert 0.0 <= row["map_labeled"] <= 1.0

    def test_back_to_back_train(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        project.propose_batch()
        confirm_all(project)
        project.train()
        with pytest.raises(ProjectError) as err:
            project.train()
        assert err.value.code == "nothing_staged"

    def test_busy_flag_blocks_other_ops(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        project.propose_batch()
        confirm_all(project)
        project.busy = True
        for call in (project.propose_batch, project.train):
            with pytest.raises(ProjectError) as err:
                call()
            assert err.value.status == 409
            assert err.value.code == "busy"
        project.busy = False

    def test_metrics_rows_accumulate_in_order(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(15))
        for _ in range(2):
            project.propose_batch()
            confirm_all(project)
            project.train()
        m = project.metrics()
        steps = [r["step"] for r in m["curve"]]
        assert steps == [1, 2]
        assert [r["labeled_count"] for r in m["curve"]] == [5, 10]
        assert m["pool"] == {"unlabeled": 5, "staged": 0, "labeled": 10}

    def test_pool_conservation_through_lifecycle(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(12))
        total = 12

        def check():
            assert sum(project.pool_counts().values()) == total

        check()
        project.propose_batch()
        check()
        confirm_all(project)
        check()
        project.train()
        check()


class TestPersistence:
    def test_reload_after_full_cycle_identical(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8, with_sidecars=True))
        project.propose_batch()
        confirm_all(project)
        project.train()
        reloaded = load_project(project.directory)
        assert reloaded.state_digest() == project.state_digest()
        assert reloaded.pool_counts() == project.pool_counts()
        assert reloaded.curve == project.curve

    def test_reload_with_pending_batch(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(8))
        result = project.propose_batch()
        reloaded = load_project(project.directory)
        assert reloaded.state_digest() == project.state_digest()
        # the reloaded pending batch accepts the same decisions
        decisions = [
            {"proposal_id": p["proposal_id"], "action": "confirm"}
            for img in result["images"]
            for p in img["proposals"]
        ]
        reloaded.submit_labels(result["batch_id"], decisions, [])
        assert reloaded.pool_counts()["staged"] == 5

    def test_event_log_sequence_monotone(self, tmp_path):
        project = fresh_project(tmp_path)
        project.ingest(scene_files(6))
        project.propose_batch()
        confirm_all(project)
        project.train()
        lines = (project.directory / "events.log").read_text().splitlines()
        events = [json.loads(line) for line in lines]
        seqs = [e["seq"] for e in events]
        assert seqs == sorted(seqs)
        assert len(set(seqs)) == len(seqs)
        kinds = [e["kind"] for e in events]
        for expected in ("project_created", "data_ingested", "batch_proposed",
                         "labels_submitted", "train_finished"):
            assert expected in kinds

    def test_unknown_image_404(self, tmp_path):
        project = fresh_project(tmp_path)
        with pytest.raises(ProjectError) as err:
            project.image_bytes("deadbeef")
        assert err.value.status == 404


class TestGrowModel:
    def test_preserves_old_heads(self, tmp_path):
        project = fresh_project(tmp_path)
        model = project.model
        rng = np.random.default_rng(0)
        model.w_class += rng.normal(size=model.w_class.shape)
        grown = grow_model_classes(model, 5)
        assert grown.config.num_classes == 5
        np.testing.assert_array_equal(grown.w_class[:3], model.w_class)
        np.testing.assert_array_equal(grown.w_class[3:], 0.0)
        np.testing.assert_array_equal(grown.w_conf, model.w_conf)
        np.testing.assert_array_equal(grown.w_geom, model.w_geom)


class TestHttpApi:
    @pytest.fixture
    def client(self, tmp_path):
        app = create_app(tmp_path / "root")
        with TestClient(app) as c:
            yield c

    def make_project(self, client, **body):
        payload = {
            "class_names": ["disk", "square", "triangle"],
            "image_size": 48,
            "s_h": 4,
            "s_v": 4,
            "batch_size": 5,
            "update_iterations": 5,
        }
        payload.update(body)
        resp = client.post("/projects", json=payload)
        assert resp.status_code == 201
        return resp.json()

    def upload(self, client, pid, files):
        multipart = [
            ("files", (name, content, "application/octet-stream"))
            for name, content in files
        ]
        return client.post(f"/projects/{pid}/data", files=multipart)

    def test_create_and_get(self, client):
        info = self.make_project(client)
        pid = info["id"]
        got = client.get(f"/projects/{pid}")
        assert got.status_code == 200
        body = got.json()
        assert body["class_names"] == ["disk", "square", "triangle"]
        assert body["pool"] == {"unlabeled": 0, "staged": 0, "labeled": 0}
        assert body["digest"] == info["digest"]

    def test_unknown_project_404_body(self, client):
        resp = client.get("/projects/nope")
        assert resp.status_code == 404
        body = resp.json()
        assert set(body) == {"code", "message"}
        assert body["code"] == "not_found"

    def test_bad_create_400(self, client):
        resp = client.post("/projects", json={"metric": "entropy"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_metric"

    def test_upload_and_image_roundtrip(self, client):
        info = self.make_project(client)
        pid = info["id"]
        files = scene_files(6)
        resp = self.upload(client, pid, files)
        assert resp.status_code == 200
        assert resp.json() == {"added": 6}
        got = client.get(f"/projects/{pid}")
        assert got.json()["pool"]["unlabeled"] == 6
        # one stored image comes back byte-identical as image/png
        select = client.post(f"/projects/{pid}/select").json()
        image_id = select["images"][0]["image_id"]
        img = client.get(f"/projects/{pid}/images/{image_id}")
        assert img.status_code == 200
        assert img.headers["content-type"] == "image/png"
        assert img.content in [content for _, content in files]

    def test_upload_invalid_file_400(self, client):
        info = self.make_project(client)
        resp = self.upload(client, info["id"], [("bad.png", b"junk")])
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_scene_file"

    def test_empty_upload_400(self, client):
        info = self.make_project(client)
        resp = client.post(
            f"/projects/{info['id']}/data",
            files=[("ignored", ("note.txt", b"x", "text/plain"))],
        )
        # a non-upload form still counts the file part; use empty form
        resp = client.post(f"/projects/{info['id']}/data", data={"note": "x"})
        assert resp.status_code == 400

    def test_full_session_and_crash_reload(self, client, tmp_path):
        info = self.make_project(client)
        pid = info["id"]
        self.upload(client, pid, scene_files(8))

        select = client.post(f"/projects/{pid}/select")
        assert select.status_code == 200
        batch = select.json()
        decisions = [
            {"proposal_id": p["proposal_id"], "action": "confirm"}
            for img in batch["images"]
            for p in img["proposals"]
        ]
        labels = client.post(
            f"/projects/{pid}/labels",
            json={"batch_id": batch["batch_id"], "decisions": decisions, "added_boxes": []},
        )
        assert labels.status_code == 200

        train = client.post(f"/projects/{pid}/train")
        assert train.status_code == 200
        assert train.json()["iterations"] == 5

        metrics = client.get(f"/projects/{pid}/metrics").json()
        assert len(metrics["curve"]) == 1
        assert metrics["pool"] == {"unlabeled": 3, "staged": 0, "labeled": 5}

        digest = client.get(f"/projects/{pid}").json()["digest"]
        # a brand-new app over the same root must lazily rediscover the
        # project from disk with an identical digest
        fresh = TestClient(create_app(tmp_path / "root"))
        again = fresh.get(f"/projects/{pid}")
        assert again.status_code == 200
        assert again.json()["digest"] == digest

    def test_stale_batch_409(self, client):
        info = self.make_project(client)
        pid = info["id"]
        self.upload(client, pid, scene_files(8))
        client.post(f"/projects/{pid}/select")
        resp = client.post(
            f"/projects/{pid}/labels",
            json={"batch_id": "b999999", "decisions": [], "added_boxes": []},
        )
        assert resp.status_code == 409
        assert resp.json()["code"] == "stale_batch"

    def test_train_without_staged_400(self, client):
        info = self.make_project(client)
        pid = info["id"]
        self.upload(client, pid, scene_files(8))
        resp = client.post(f"/projects/{pid}/train")
        assert resp.status_code == 400
        assert resp.json()["code"] == "nothing_staged"

    def test_select_on_empty_pool_400(self, client):
        info = self.make_project(client)
        resp = client.post(f"/projects/{info['id']}/select")
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_pool"
