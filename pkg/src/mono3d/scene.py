"""Ground-truth world model and the scenario file format.

A scenario file is a UTF-8 JSON document::

    {
      "camera": {"width": 640, "height": 480, "hfov_deg": 90.0},
      "reach_m": 0.5,
      "objects": [{"id": "s1", "center_m": [0.6, 0.0, 0.0], "radius_m": 0.05}],
      "viewpoints": [{"translation_m": [0, 0, 0], "quaternion_xyzw": [0, 0, 0, 1]}],
      "noise": {"center_sigma": 0.05, "size_sigma": 0.05, "dropout_prob": 0.02, "seed": 0},
      "filter": {"resolution_m": 0.01, "kernel": "gaussian", "sigma_divisor": 3, "threshold": 0.5}
    }

``camera`` may also carry ``cx``/``cy``.  ``noise`` and ``filter`` are
optional.  Unknown keys are rejected at every level.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .detection import NoiseModel
from .errors import ParseError, ValidationError
from .geometry import CameraModel, Pose, Quaternion

log = logging.getLogger(__name__)

KERNEL_KINDS = ("square", "gaussian")


@dataclass(frozen=True)
class SceneObject:
    id: str
    center: Tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValidationError("radius", f"object {self.id!r} radius must be > 0")


@dataclass(frozen=True)
class Scene:
    objects: Tuple[SceneObject, ...]
    reach: float

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if not (self.reach > 0):
            raise ValidationError("reach_m", "must be > 0")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValidationError("objects.id", "object ids must be unique")

    def centers(self) -> np.ndarray:
        return np.array([o.center for o in self.objects], dtype=float).reshape(-1, 3)


@dataclass(frozen=True)
class ViewpointSchedule:
    poses: Tuple[Pose, ...]

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if len(self.poses) < 2:
            raise ValidationError("viewpoints", "at least 2 viewpoints are required")

    def __len__(self):
        return len(self.poses)

    def __iter__(self):
        return iter(self.poses)

    def __getitem__(self, i):
        return self.poses[i]


@dataclass(frozen=True)
class FilterSettings:
    """Per-scenario overrides; ``None`` means use the caller's default."""

    resolution: Optional[float] = None
    kernel: Optional[str] = None
    sigma_divisor: Optional[float] = None
    threshold: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    scene: Scene
    schedule: ViewpointSchedule
    camera: CameraModel
    noise: Optional[NoiseModel] = None
    filter: FilterSettings = field(default_factory=FilterSettings)


def collinear_objects(scene: Scene, schedule: ViewpointSchedule, tol: float = 1e-6) -> List[str]:
    """Ids of objects that lie on one line with every camera position.

    Such an object is seen along the same ray from all viewpoints and its
    depth cannot be recovered.
    """
    cams = np.array([p.translation for p in schedule.poses])
    bad = []
    for obj in scene.objects:
        pts = np.vstack([cams, np.asarray(obj.center)[None, :]])
        centred = pts - pts.mean(axis=0)
        sv = np.linalg.svd(centred, compute_uv=False)
        if sv[0] == 0 or sv[1] <= tol * max(sv[0], 1.0):
            bad.append(obj.id)
    return bad


# -- parsing ---------------------------------------------------------------

def _check_keys(d, allowed, where, required=()):
    if not isinstance(d, dict):
        raise ValidationError(where, "expected an object")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ValidationError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown key")
    for k in required:
        if k not in d:
            raise ValidationError(f"{where}.{k}" if where else k, "missing required key")


def _num(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValidationError(name, "expected a finite number")
    return float(v)


def _vec3(v, name):
    if not isinstance(v, list) or len(v) != 3:
        raise ValidationError(name, "expected [x, y, z]")
    return tuple(_num(c, name) for c in v)


def _int(v, name):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(name, "expected an integer")
    return v


def _parse_camera(d) -> CameraModel:
    _check_keys(d, ("width", "height", "hfov_deg", "cx", "cy"), "camera",
                required=("width", "height", "hfov_deg"))
    return CameraModel(
        width=_int(d["width"], "camera.width"),
        height=_int(d["height"], "camera.height"),
        hfov_deg=_num(d["hfov_deg"], "camera.hfov_deg"),
        cx=_num(d["cx"], "camera.cx") if "cx" in d else None,
        cy=_num(d["cy"], "camera.cy") if "cy" in d else None,
    )


def _parse_noise(d) -> NoiseModel:
    _check_keys(d, ("center_sigma", "size_sigma", "dropout_prob", "seed"), "noise")
    return NoiseModel(
        center_sigma=_num(d.get("center_sigma", 0.0), "noise.center_sigma"),
        size_sigma=_num(d.get("size_sigma", 0.0), "noise.size_sigma"),
        dropout_prob=_num(d.get("dropout_prob", 0.0), "noise.dropout_prob"),
        rng_seed=_int(d.get("seed", 0), "noise.seed"),
    )


def _parse_filter(d) -> FilterSettings:
    _check_keys(d, ("resolution_m", "kernel", "sigma_divisor", "threshold"), "filter")
    kernel = d.get("kernel")
    if kernel is not None and kernel not in KERNEL_KINDS:
        raise ValidationError("filter.kernel", f"expected one of {KERNEL_KINDS}")
    res = _num(d["resolution_m"], "filter.resolution_m") if "resolution_m" in d else None
    if res is not None and res <= 0:
        raise ValidationError("filter.resolution_m", "must be > 0")
    div = _num(d["sigma_divisor"], "filter.sigma_divisor") if "sigma_divisor" in d else None
    if div is not None and div <= 0:
        raise ValidationError("filter.sigma_divisor", "must be > 0")
    thr = _num(d["threshold"], "filter.threshold") if "threshold" in d else None
    if thr is not None and not (0 <= thr < 1):
        raise ValidationError("filter.threshold", "must lie in [0, 1)")
    return FilterSettings(res, kernel, div, thr)


def scenario_from_dict(doc) -> Scenario:
    _check_keys(doc, ("camera", "reach_m", "objects", "viewpoints", "noise", "filter"), "",
                required=("camera", "reach_m", "objects", "viewpoints"))
    camera = _parse_camera(doc["camera"])
    if not isinstance(doc["objects"], list):
        raise ValidationError("objects", "expected a list")
    objects = []
    for i, o in enumerate(doc["objects"]):
        where = f"objects[{i}]"
        _check_keys(o, ("id", "center_m", "radius_m"), where, required=("id", "center_m", "radius_m"))
        if not isinstance(o["id"], str):
            raise ValidationError(f"{where}.id", "expected a string")
        objects.append(SceneObject(o["id"], _vec3(o["center_m"], f"{where}.center_m"),
                                   _num(o["radius_m"], "radius")))
    scene = Scene(tuple(objects), _num(doc["reach_m"], "reach_m"))
    if not isinstance(doc["viewpoints"], list):
        raise ValidationError("viewpoints", "expected a list")
    poses = []
    for i, v in enumerate(doc["viewpoints"]):
        where = f"viewpoints[{i}]"
        _check_keys(v, ("translation_m", "quaternion_xyzw"), where,
                    required=("translation_m", "quaternion_xyzw"))
        q = v["quaternion_xyzw"]
        if not isinstance(q, list) or len(q) != 4:
            raise ValidationError(f"{where}.quaternion_xyzw", "expected [x, y, z, w]")
        q = [_num(c, f"{where}.quaternion_xyzw") for c in q]
        poses.append(Pose(_vec3(v["translation_m"], f"{where}.translation_m"),
                          Quaternion.from_xyzw(q)))
    schedule = ViewpointSchedule(tuple(poses))
    noise = _parse_noise(doc["noise"]) if "noise" in doc else None
    settings = _parse_filter(doc["filter"]) if "filter" in doc else FilterSettings()
    for oid in collinear_objects(scene, schedule):
        log.warning("object %s is collinear with every viewpoint; its depth is unobservable", oid)
    return Scenario(scene, schedule, camera, noise, settings)


def loads_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def load_scene(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8") from exc
    return loads_scenario(text)


def scenario_to_dict(sc: Scenario) -> dict:
    cam = {"width": sc.camera.width, "height": sc.camera.height, "hfov_deg": sc.camera.hfov_deg}
    if sc.camera.cx is not None:
        cam["cx"] = sc.camera.cx
    if sc.camera.cy is not None:
        cam["cy"] = sc.camera.cy
    doc = {
        "camera": cam,
        "reach_m": sc.scene.reach,
        "objects": [
            {"id": o.id, "center_m": list(o.center), "radius_m": o.radius} for o in sc.scene.objects
        ],
        "viewpoints": [
            {"translation_m": list(p.translation), "quaternion_xyzw": list(p.rotation.as_xyzw())}
            for p in sc.schedule.poses
        ],
    }
    if sc.noise is not None:
        doc["noise"] = {
            "center_sigma": sc.noise.center_sigma,
            "size_sigma": sc.noise.size_sigma,
            "dropout_prob": sc.noise.dropout_prob,
            "seed": sc.noise.rng_seed,
        }
    fs = sc.filter
    filt = {}
    if fs.resolution is not None:
        filt["resolution_m"] = fs.resolution
    if fs.kernel is not None:
        filt["kernel"] = fs.kernel
    if fs.sigma_divisor is not None:
        filt["sigma_divisor"] = fs.sigma_divisor
    if fs.threshold is not None:
        filt["threshold"] = fs.threshold
    if filt:
        doc["filter"] = filt
    return doc


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def save_scene(sc: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_scenario(sc), encoding="utf-8")


def bundled_scenario_path(name: str = "sim6.scenario") -> Path:
    return Path(__file__).parent / "data" / name
