import json
import logging

import pytest

from mono3d.errors import ParseError, ValidationError
from mono3d.scene import (
    bundled_scenario_path,
    collinear_objects,
    dumps_scenario,
    load_scene,
    loads_scenario,
    save_scene,
)

MINIMAL = {
    "camera": {"width": 640, "height": 480, "hfov_deg": 90.0},
    "reach_m": 0.5,
    "objects": [{"id": "a", "center_m": [0.6, 0.0, 0.0], "radius_m": 0.05}],
    "viewpoints": [
        {"translation_m": [0, 0, 0], "quaternion_xyzw": [0, 0, 0, 1]},
        {"translation_m": [0, 0.2, 0.1], "quaternion_xyzw": [0, 0, -0.2, 1]},
    ],
}


def doc(**changes):
    d = json.loads(json.dumps(MINIMAL))
    d.update(changes)
    return d


def test_minimal():
    sc = loads_scenario(json.dumps(MINIMAL))
    assert len(sc.scene.objects) == 1
    assert len(sc.schedule) == 2
    assert sc.camera.focal == pytest.approx(320.0)
    assert sc.noise is None


def test_negative_radius():
    d = doc(objects=[{"id": "a", "center_m": [0.6, 0, 0], "radius_m": -0.05}])
    with pytest.raises(ValidationError) as err:
        loads_scenario(json.dumps(d))
    assert "radius" in str(err.value)


def test_bundled_fixture(sim6):
    assert len(sim6.scene.objects) == 6
    assert sorted({o.radius for o in sim6.scene.objects}) == [0.05, 0.10]
    assert len(sim6.schedule) == 3
    assert collinear_objects(sim6.scene, sim6.schedule) == []


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.update(extra=1), "extra"),
        (lambda d: d["camera"].update(fov=3), "camera.fov"),
        (lambda d: d["objects"][0].update(color="red"), "objects[0].color"),
        (lambda d: d.pop("reach_m"), "reach_m"),
        (lambda d: d.update(reach_m=0), "reach_m"),
        (lambda d: d.update(viewpoints=d["viewpoints"][:1]), "viewpoints"),
        (lambda d: d["viewpoints"][0].update(quaternion_xyzw=[0, 0, 0]), "viewpoints[0].quaternion_xyzw"),
        (lambda d: d["objects"].append(dict(d["objects"][0])), "objects.id"),
        (lambda d: d["camera"].update(hfov_deg=180), "camera.hfov_deg"),
        (lambda d: d.update(filter={"kernel": "box"}), "filter.kernel"),
        (lambda d: d.update(noise={"dropout_prob": 2}), "noise.dropout_prob"),
    ],
)
def test_validation_names_field(mutate, field):
    d = doc()
    mutate(d)
    with pytest.raises(ValidationError) as err:
        loads_scenario(json.dumps(d))
    assert err.value.field == field


def test_parse_error():
    with pytest.raises(ParseError):
        loads_scenario("{not json")


def test_deterministic_and_round_trip(tmp_path, sim6):
    path = bundled_scenario_path()
    assert load_scene(path) == load_scene(path)
    out = tmp_path / "copy.scenario"
    save_scene(sim6, out)
    assert load_scene(out) == sim6
    assert dumps_scenario(load_scene(out)) == dumps_scenario(sim6)


def test_noise_and_filter_sections():
    sc = loads_scenario(json.dumps(doc(
        noise={"center_sigma": 0.05, "size_sigma": 0.05, "dropout_prob": 0.02, "seed": 4},
        filter={"resolution_m": 0.02, "kernel": "gaussian", "sigma_divisor": 3, "threshold": 0.4},
    )))
    assert sc.noise.rng_seed == 4 and sc.noise.dropout_prob == 0.02
    assert sc.filter.kernel == "gaussian" and sc.filter.sigma_divisor == 3.0
    assert loads_scenario(dumps_scenario(sc)) == sc


def test_collinear_warning(caplog):
    d = doc(
        objects=[{"id": "a", "center_m": [1.0, 0.0, 0.0], "radius_m": 0.05}],
        viewpoints=[
            {"translation_m": [0, 0, 0], "quaternion_xyzw": [0, 0, 0, 1]},
            {"translation_m": [0.3, 0, 0], "quaternion_xyzw": [0, 0, 0, 1]},
        ],
    )
    with caplog.at_level(logging.WARNING):
        sc = loads_scenario(json.dumps(d))
    assert collinear_objects(sc.scene, sc.schedule) == ["a"]
    assert "collinear" in caplog.text
