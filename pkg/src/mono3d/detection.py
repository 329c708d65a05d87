"""Bounding-box detections: ideal simulated camera, noise model, replay files.

Replay file format (UTF-8 JSON, pixels, origin top-left, x right, y down)::

    {"detections": [
        {"viewpoint_index": 0,
         "boxes": [{"cx": 320, "cy": 240, "bw": 32, "bh": 32,
                    "label": "tomato", "confidence": 0.9}]}
    ]}
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import CameraModel, Pose, camera_to_sensor, project, world_to_camera


@dataclass(frozen=True)
class BoundingBox:
    cx: float
    cy: float
    bw: float
    bh: float
    label: str = "object"
    confidence: float = 1.0

    def __post_init__(self):
        for name in ("cx", "cy", "bw", "bh", "confidence"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if not (self.bw > 0 and self.bh > 0):
            raise ValidationError("bw/bh", "box size must be positive")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError("confidence", "must lie in [0, 1]")

    @property
    def corners(self) -> Tuple[float, float, float, float]:
        """``(x0, y0, x1, y1)``."""
        return (self.cx - self.bw / 2, self.cy - self.bh / 2,
                self.cx + self.bw / 2, self.cy + self.bh / 2)

    def contains(self, u: float, v: float) -> bool:
        return abs(u - self.cx) <= self.bw / 2 and abs(v - self.cy) <= self.bh / 2


@dataclass(frozen=True)
class DetectionSet:
    viewpoint_index: int
    boxes: Tuple[BoundingBox, ...]

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if self.viewpoint_index < 0:
            raise ValidationError("viewpoint_index", "must be >= 0")

    def __len__(self):
        return len(self.boxes)


@dataclass(frozen=True)
class NoiseModel:
    """Detector imperfection model.

    ``center_sigma`` is a fraction of the image width/height, ``size_sigma`` a
    relative fraction of the box size; ``dropout_prob`` is per box.
    """

    center_sigma: float = 0.0
    size_sigma: float = 0.0
    dropout_prob: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.center_sigma >= 0):
            raise ValidationError("noise.center_sigma", "must be >= 0")
        if not (self.size_sigma >= 0):
            raise ValidationError("noise.size_sigma", "must be >= 0")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ValidationError("noise.dropout_prob", "must lie in [0, 1]")

    @property
    def is_identity(self) -> bool:
        return self.center_sigma == 0 and self.size_sigma == 0 and self.dropout_prob == 0


def clip_box(box: BoundingBox, cam: CameraModel) -> Optional[BoundingBox]:
    """Clip to the image rectangle; ``None`` when nothing overlaps.

    Boxes already inside the image are returned untouched so that clipping
    never perturbs them by rounding.
    """
    x0, y0, x1, y1 = box.corners
    w, h = cam.width, cam.height
    if x1 <= 0 or y1 <= 0 or x0 >= w or y0 >= h:
        return None
    if x0 >= 0 and y0 >= 0 and x1 <= w and y1 <= h:
        return box
    x0, y0 = max(x0, 0.0), max(y0, 0.0)
    x1, y1 = min(x1, float(w)), min(y1, float(h))
    return replace(box, cx=0.5 * (x0 + x1), cy=0.5 * (y0 + y1), bw=x1 - x0, bh=y1 - y0)


def sphere_box(center, radius: float, pose: Pose, cam: CameraModel) -> Optional[BoundingBox]:
    """Unclipped box of a sphere seen from ``pose``; ``None`` if behind the camera.

    Uses the first-order half-extent ``f * r / z`` with ``z`` the optical
    depth of the sphere centre.
    """
    ps = camera_to_sensor(world_to_camera(np.asarray(center, dtype=float), pose))
    z = float(ps[2])
    if z <= 0.0:
        return None
    u, v = project(ps, cam)
    half = cam.focal * radius / z
    return BoundingBox(u, v, 2 * half, 2 * half, label="sphere", confidence=1.0)


def simulate_detections(scene, pose: Pose, cam: CameraModel, viewpoint_index: int = 0) -> DetectionSet:
    """Ideal bounding-box camera: one clipped box per visible sphere."""
    boxes = []
    for obj in scene.objects:
        box = sphere_box(obj.center, obj.radius, pose, cam)
        if box is None:
            continue
        box = clip_box(box, cam)
        if box is not None:
            boxes.append(box)
    return DetectionSet(viewpoint_index, tuple(boxes))


def apply_noise(d: DetectionSet, noise: NoiseModel, cam: CameraModel) -> DetectionSet:
    """Perturb centres and sizes and drop boxes at random.

    Every box consumes exactly one uniform and four normal draws whether or
    not it is dropped, so each box's perturbation is independent of the fate
    of the boxes before it.
    """
    rng = np.random.default_rng(noise.rng_seed)
    out = []
    for box in d.boxes:
        drop = rng.random() < noise.dropout_prob
        n = rng.standard_normal(4)
        if drop:
            continue
        cx = box.cx + n[0] * noise.center_sigma * cam.width
        cy = box.cy + n[1] * noise.center_sigma * cam.height
        bw = box.bw * (1.0 + n[2] * noise.size_sigma)
        bh = box.bh * (1.0 + n[3] * noise.size_sigma)
        if bw <= 0 or bh <= 0:
            bw, bh = max(bw, 1.0), max(bh, 1.0)
        noisy = clip_box(replace(box, cx=cx, cy=cy, bw=bw, bh=bh), cam)
        if noisy is None:
            continue
        if noisy.bw < 1.0 or noisy.bh < 1.0:
            bw, bh = max(noisy.bw, 1.0), max(noisy.bh, 1.0)
            # keep the widened sliver inside the image
            cx = min(max(noisy.cx, 0.5 * bw), cam.width - 0.5 * bw)
            cy = min(max(noisy.cy, 0.5 * bh), cam.height - 0.5 * bh)
            noisy = replace(noisy, cx=cx, cy=cy, bw=bw, bh=bh)
        out.append(noisy)
    return DetectionSet(d.viewpoint_index, tuple(out))


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic child seed for (run, viewpoint, ...) streams."""
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


# -- replay files ----------------------------------------------------------

def _box_from_dict(b, where) -> BoundingBox:
    if not isinstance(b, dict):
        raise ValidationError(where, "expected an object")
    allowed = {"cx", "cy", "bw", "bh", "label", "confidence"}
    unknown = sorted(set(b) - allowed)
    if unknown:
        raise ValidationError(f"{where}.{unknown[0]}", "unknown key")
    for k in ("cx", "cy", "bw", "bh"):
        if k not in b:
            raise ValidationError(f"{where}.{k}", "missing required key")
        v = b[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"{where}.{k}", "expected a number")
    label = b.get("label", "object")
    if not isinstance(label, str):
        raise ValidationError(f"{where}.label", "expected a string")
    conf = b.get("confidence", 1.0)
    if isinstance(conf, bool) or not isinstance(conf, (int, float)):
        raise ValidationError(f"{where}.confidence", "expected a number")
    try:
        return BoundingBox(float(b["cx"]), float(b["cy"]), float(b["bw"]), float(b["bh"]),
                           label, float(conf))
    except ValidationError as exc:
        raise ValidationError(f"{where}.{exc.field}", "invalid value") from exc


def detections_from_dict(doc, num_viewpoints: Optional[int] = None) -> List[DetectionSet]:
    if not isinstance(doc, dict) or set(doc) != {"detections"}:
        raise ValidationError("detections", "expected a single top-level 'detections' key")
    items = doc["detections"]
    if not isinstance(items, list):
        raise ValidationError("detections", "expected a list")
    sets = {}
    for i, item in enumerate(items):
        where = f"detections[{i}]"
        if not isinstance(item, dict) or set(item) - {"viewpoint_index", "boxes"}:
            raise ValidationError(where, "expected keys viewpoint_index, boxes")
        idx = item.get("viewpoint_index")
        if isinstance(idx, bool) or not isinstance(idx, int) or idx < 0:
            raise ValidationError(f"{where}.viewpoint_index", "expected a non-negative integer")
        if num_viewpoints is not None and idx >= num_viewpoints:
            raise ValidationError(f"{where}.viewpoint_index",
                                  f"{idx} is out of range for {num_viewpoints} viewpoints")
        if idx in sets:
            raise ValidationError(f"{where}.viewpoint_index", f"duplicate index {idx}")
        boxes = item.get("boxes", [])
        if not isinstance(boxes, list):
            raise ValidationError(f"{where}.boxes", "expected a list")
        sets[idx] = DetectionSet(idx, tuple(_box_from_dict(b, f"{where}.boxes[{j}]")
                                            for j, b in enumerate(boxes)))
    return [sets[k] for k in sorted(sets)]


def load_detections(path: Union[str, Path], num_viewpoints: Optional[int] = None) -> List[DetectionSet]:
    """Read a replay file; one :class:`DetectionSet` per viewpoint, sorted by index."""
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return detections_from_dict(doc, num_viewpoints)


def detections_to_dict(sets: Sequence[DetectionSet]) -> dict:
    return {
        "detections": [
            {
                "viewpoint_index": d.viewpoint_index,
                "boxes": [
                    {"cx": b.cx, "cy": b.cy, "bw": b.bw, "bh": b.bh,
                     "label": b.label, "confidence": b.confidence}
                    for b in d.boxes
                ],
            }
            for d in sets
        ]
    }


def save_detections(sets: Sequence[DetectionSet], path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(detections_to_dict(sets), indent=2) + "\n", encoding="utf-8")
