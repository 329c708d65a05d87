import json

import numpy as np
import pytest

from mono3d.detection import (
    BoundingBox,
    DetectionSet,
    NoiseModel,
    apply_noise,
    derive_seed,
    detections_to_dict,
    load_detections,
    save_detections,
    simulate_detections,
    sphere_box,
)
from mono3d.errors import ParseError, ValidationError
from mono3d.geometry import Pose
from mono3d.scene import Scene, SceneObject


def scene_of(*objs):
    return Scene(tuple(SceneObject(f"o{i}", c, r) for i, (c, r) in enumerate(objs)), 0.5)


class TestSimulate:
    def test_dead_ahead(self, cam):
        # depth 1 m, r = 0.05, f = 320 -> 2 * 320 * 0.05 / 1 = 32 px
        d = simulate_detections(scene_of(((1.0, 0, 0), 0.05)), Pose.identity(), cam)
        (b,) = d.boxes
        assert (b.cx, b.cy) == (320.0, 240.0)
        assert b.bw == pytest.approx(32.0, abs=1e-12) and b.bh == pytest.approx(32.0, abs=1e-12)
        assert b.confidence == 1.0

    def test_behind_excluded(self, cam):
        d = simulate_detections(scene_of(((-1.0, 0, 0), 0.05)), Pose.identity(), cam)
        assert len(d) == 0

    def test_outside_image_excluded(self, cam):
        # projects to u = 320 + 320 * 3 = 1280, box half-width 16 px
        d = simulate_detections(scene_of(((1.0, -3.0, 0), 0.05)), Pose.identity(), cam)
        assert len(d) == 0

    def test_edge_box_clipped(self, cam):
        # centre projects to u = 640; half the box is cut off
        d = simulate_detections(scene_of(((1.0, -1.0, 0), 0.05)), Pose.identity(), cam)
        (b,) = d.boxes
        assert b.corners[2] == 640.0
        assert b.bw == pytest.approx(16.0)

    def test_contains_projection(self, sim6, cam):
        from mono3d.geometry import camera_to_sensor, project, world_to_camera
        for pose in sim6.schedule:
            for o in sim6.scene.objects:
                b = sphere_box(o.center, o.radius, pose, cam)
                u, v = project(camera_to_sensor(world_to_camera(o.center, pose)), cam)
                assert b.contains(u, v)

    def test_half_width_scales_with_inverse_depth(self, cam):
        b1 = sphere_box((0.5, 0.05, 0.02), 0.03, Pose.identity(), cam)
        b2 = sphere_box((1.0, 0.10, 0.04), 0.03, Pose.identity(), cam)
        assert b2.bw == pytest.approx(b1.bw / 2, abs=1e-6)


class TestNoise:
    def boxes(self, n=6):
        return DetectionSet(0, tuple(BoundingBox(100 + 80 * i, 240, 40, 30) for i in range(n)))

    def test_identity(self, cam):
        d = self.boxes()
        assert apply_noise(d, NoiseModel(0, 0, 0, 7), cam) == d

    def test_full_dropout(self, cam):
        assert len(apply_noise(self.boxes(), NoiseModel(0.05, 0.05, 1.0, 1), cam)) == 0

    def test_deterministic(self, cam):
        nm = NoiseModel(0.05, 0.05, 0.02, 123)
        a = apply_noise(self.boxes(), nm, cam)
        b = apply_noise(self.boxes(), nm, cam)
        assert json.dumps(detections_to_dict([a])) == json.dumps(detections_to_dict([b]))
        c = apply_noise(self.boxes(), NoiseModel(0.05, 0.05, 0.02, 124), cam)
        assert a != c

    def test_boxes_stay_valid(self, cam):
        for seed in range(200):
            out = apply_noise(self.boxes(), NoiseModel(0.2, 0.5, 0.1, seed), cam)
            for b in out.boxes:
                x0, y0, x1, y1 = b.corners
                assert b.bw >= 1.0 and b.bh >= 1.0
                assert x0 >= -1e-9 and y0 >= -1e-9 and x1 <= 640 + 1e-9 and y1 <= 480 + 1e-9

    def test_dropout_rate(self, cam):
        # boxes are far from the border, so only dropout removes them
        d = self.boxes(5)
        p, trials = 0.02, 10_000
        counts = np.array([len(apply_noise(d, NoiseModel(0.0, 0.0, p, s), cam)) for s in range(trials)])
        expected = 5 * (1 - p)
        sd = np.sqrt(5 * p * (1 - p) / trials)
        assert abs(counts.mean() - expected) < 3 * sd

    def test_derived_seeds_distinct(self):
        seeds = {derive_seed(42, r, v) for r in range(6) for v in range(3)}
        assert len(seeds) == 18
        assert derive_seed(42, 1, 2) == derive_seed(42, 1, 2)


class TestReplayFile:
    def test_round_trip(self, tmp_path):
        sets = [DetectionSet(1, (BoundingBox(10, 20, 5, 6, "tomato", 0.9),)), DetectionSet(0, ())]
        path = tmp_path / "d.json"
        save_detections(sets, path)
        loaded = load_detections(path, num_viewpoints=2)
        assert [d.viewpoint_index for d in loaded] == [0, 1]
        assert loaded[1].boxes[0] == BoundingBox(10, 20, 5, 6, "tomato", 0.9)

    @pytest.mark.parametrize(
        "doc",
        [
            {"detections": [{"viewpoint_index": 0, "boxes": [{"cx": 1, "cy": 1, "bw": 0, "bh": 1}]}]},
            {"detections": [{"viewpoint_index": 0, "boxes": [{"cx": 1, "cy": 1, "bw": 1}]}]},
            {"detections": [{"viewpoint_index": 5, "boxes": []}]},
            {"detections": [{"viewpoint_index": 0}, {"viewpoint_index": 0}]},
            {"detections": [{"viewpoint_index": 0, "boxes": [
                {"cx": 1, "cy": 1, "bw": 1, "bh": 1, "confidence": 1.5}]}]},
            {"dets": []},
        ],
    )
    def test_invalid(self, tmp_path, doc):
        path = tmp_path / "d.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError):
            load_detections(path, num_viewpoints=3)

    def test_parse_error(self, tmp_path):
        path = tmp_path / "d.json"
        path.write_text("[")
        with pytest.raises(ParseError):
            load_detections(path)
