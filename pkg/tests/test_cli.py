import csv
import json

import pytest

from mono3d.cli import main
from mono3d.detection import detections_to_dict
from mono3d.pipeline import simulate_all
from mono3d.scene import bundled_scenario_path, load_scene, scenario_to_dict

SIM6 = str(bundled_scenario_path())


def bundled_doc():
    return scenario_to_dict(load_scene(SIM6))


def metrics(out):
    with open(out / "metrics.csv") as fh:
        return {r["metric"]: float(r["value"]) for r in csv.DictReader(fh)}


def test_simulate_noiseless(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["simulate", "--scenario", SIM6, "--kernel", "square", "--no-permute",
                 "--out", str(out)])
    assert code == 0
    m = metrics(out)
    assert max(m["mae_x"], m["mae_y"], m["mae_z"]) < 0.01
    assert m["n_pairs"] == 6
    rows = list(csv.DictReader(open(out / "estimates.csv")))
    assert len(rows) == 6 and {r["object_id"] for r in rows} == {f"s{i}" for i in range(1, 7)}
    assert "mean_euclidean" in capsys.readouterr().out


def test_simulate_permutations_and_seed(tmp_path):
    args = ["simulate", "--scenario", SIM6, "--resolution", "0.02", "--seed", "42",
            "--noise-center-sigma", "0.02", "--noise-size-sigma", "0.05", "--dropout", "0.0",
            "--kernel", "gaussian", "--sigma-divisor", "3", "--trace"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    for name in ("estimates.csv", "metrics.csv", "per_object.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = list(csv.DictReader(open(a / "estimates.csv")))
    assert len({r["order"] for r in rows}) == 6
    traces = sorted(p.name for p in (a / "trace").iterdir())
    assert len(traces) == 18 and traces[0] == "run00_step0_view0.csv"
    assert [p.read_bytes() for p in sorted((a / "trace").iterdir())] == \
           [p.read_bytes() for p in sorted((b / "trace").iterdir())]


def test_missing_scenario(tmp_path, capsys):
    missing = tmp_path / "nope.scenario"
    assert main(["simulate", "--scenario", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_invalid_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.scenario"
    doc = bundled_doc()
    doc["objects"][0]["radius_m"] = -0.05
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--scenario", str(bad)]) == 2
    assert "radius" in capsys.readouterr().err


def test_replay(tmp_path, sim6):
    dets = tmp_path / "d.json"
    dets.write_text(json.dumps(detections_to_dict(simulate_all(sim6))))
    assert main(["validate", "--scenario", SIM6, "--detections", str(dets)]) == 0
    out = tmp_path / "o"
    assert main(["replay", "--scenario", SIM6, "--detections", str(dets), "--kernel", "gaussian",
                 "--out", str(out)]) == 0
    m = metrics(out)
    assert m["mean_euclidean"] < 0.01

    # without ground truth only the estimates are written
    doc = bundled_doc()
    doc["objects"] = []
    bare = tmp_path / "bare.scenario"
    bare.write_text(json.dumps(doc))
    out2 = tmp_path / "o2"
    assert main(["replay", "--scenario", str(bare), "--detections", str(dets), "--out", str(out2)]) == 0
    rows = list(csv.DictReader(open(out2 / "estimates.csv")))
    assert len(rows) == 6 and rows[0]["truth_x_m"] == ""
    assert not (out2 / "metrics.csv").exists()


def test_replay_too_few_views(tmp_path, sim6):
    dets = tmp_path / "d.json"
    sets = simulate_all(sim6)[:1]
    dets.write_text(json.dumps(detections_to_dict(sets)))
    assert main(["replay", "--scenario", SIM6, "--detections", str(dets),
                 "--resolution", "0.05", "--out", str(tmp_path / "o")]) == 1


def test_bench(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["bench", "--scenario", SIM6, "--workers", "2", "--resolution", "0.05",
                 "--out", str(out)]) == 0
    text = (out / "bench.csv").read_text()
    assert text.startswith("kernel,workers,median_wall_s,speedup\nsquare,1,")
    assert "max speedup" in capsys.readouterr().out


def test_bad_flag_value(tmp_path):
    assert main(["simulate", "--scenario", SIM6, "--resolution", "0.9",
                 "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["simulate", "--scenario", SIM6, "--kernel", "box"])
