"""Histogram filter over a static 3D grid of candidate object positions.

Each viewpoint turns its bounding boxes into a per-cell likelihood field
(average of per-box kernels over the cell centres projected into the image),
max-normalises the field, multiplies it into the running weights and
max-normalises the result again.

The per-cell work is an element-wise map, so the cell array can be split
across threads; only the two max reductions are sequential.  Chunks are
contiguous, their boundaries depend only on ``(n_cells, workers)``, and no
operation mixes values of different cells, hence the weights are
bit-identical for every worker count.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .detection import BoundingBox, DetectionSet
from .errors import DegenerateField, EmptyDetections, InsufficientViewpoints, InvalidResolution
from .geometry import CameraModel, Pose, world_to_pixels

log = logging.getLogger(__name__)

# chunk boundaries are multiples of this many cells
CHUNK_ALIGN = 4096


@dataclass(frozen=True)
class GridDecomposition:
    """Axis-aligned (world frame) block of cubic cells.

    ``origin`` is the minimum corner; cell ``(i, j, k)`` has its centre at
    ``origin + (i + 0.5, j + 0.5, k + 0.5) * resolution``.  Flat indices
    follow C order over ``(nx, ny, nz)``.
    """

    origin: Tuple[float, float, float]
    resolution: float
    dims: Tuple[int, int, int]

    def __post_init__(self):
        if not (self.resolution > 0):
            raise InvalidResolution(f"resolution must be > 0, got {self.resolution}")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise InvalidResolution(f"dims must be three positive counts, got {self.dims}")
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=float) * self.resolution

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.origin) + 0.5 * self.extent

    @cached_property
    def cell_centers(self) -> np.ndarray:
        """``(n_cells, 3)`` array of cell centres, C order."""
        axes = [
            self.origin[a] + (np.arange(self.dims[a]) + 0.5) * self.resolution for a in range(3)
        ]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
        pts.setflags(write=False)
        return pts

    def cell_center(self, flat_index: int) -> np.ndarray:
        i, j, k = np.unravel_index(flat_index, self.dims)
        idx = np.array([i, j, k], dtype=float)
        return np.asarray(self.origin) + (idx + 0.5) * self.resolution


def decompose(first_pose: Pose, reach: float, resolution: float) -> GridDecomposition:
    """Cube of side ``2 * reach`` centred ``reach`` ahead of the first camera."""
    if not (reach > 0):
        raise InvalidResolution(f"reach must be > 0, got {reach}")
    if not (0 < resolution <= reach):
        raise InvalidResolution(f"resolution must lie in (0, reach={reach}], got {resolution}")
    center = np.asarray(first_pose.translation) + reach * first_pose.forward()
    n = max(1, int(round(2.0 * reach / resolution)))
    origin = center - 0.5 * n * resolution
    return GridDecomposition(tuple(origin), float(resolution), (n, n, n))


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "square"
    sigma_divisor: float = 2.0

    def __post_init__(self):
        if self.kind not in ("square", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not (self.sigma_divisor > 0):
            raise ValueError("sigma_divisor must be > 0")

    @classmethod
    def square(cls) -> "KernelSpec":
        return cls("square")

    @classmethod
    def gaussian(cls, sigma_divisor: float = 2.0) -> "KernelSpec":
        return cls("gaussian", float(sigma_divisor))


def kernel_eval(kernel: KernelSpec, box: BoundingBox, u, v):
    """Likelihood in [0, 1] of pixel(s) ``(u, v)`` under one box."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if kernel.kind == "square":
        inside = (np.abs(u - box.cx) <= box.bw / 2) & (np.abs(v - box.cy) <= box.bh / 2)
        out = inside.astype(float)
    else:
        sx = box.bw / kernel.sigma_divisor
        sy = box.bh / kernel.sigma_divisor
        du = u - box.cx
        dv = v - box.cy
        out = np.exp(-(du * du) / (2.0 * sx * sx) - (dv * dv) / (2.0 * sy * sy))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ProbabilityGrid:
    grid: GridDecomposition
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} weights, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, grid: GridDecomposition) -> "ProbabilityGrid":
        return cls(grid, np.ones(grid.n_cells))

    def as_volume(self) -> np.ndarray:
        return self.weights.reshape(self.grid.dims)


# -- parallel map ----------------------------------------------------------

def partition(n: int, workers: int) -> List[Tuple[int, int]]:
    """Split ``range(n)`` into at most ``workers`` aligned contiguous chunks."""
    workers = max(1, int(workers))
    if workers == 1 or n <= CHUNK_ALIGN:
        return [(0, n)]
    blocks = math.ceil(n / CHUNK_ALIGN)
    per = math.ceil(blocks / workers)
    bounds = []
    lo = 0
    while lo < n:
        hi = min(n, lo + per * CHUNK_ALIGN)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def _map_chunks(fn: Callable[[int, int], object], n: int, workers: int,
                executor: Optional[Executor], timings: Optional[dict] = None) -> list:
    t0 = time.perf_counter()
    chunks = partition(n, workers)
    if len(chunks) == 1:
        out = [fn(*chunks[0])]
    elif executor is not None:
        out = list(executor.map(lambda c: fn(*c), chunks))
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            out = list(pool.map(lambda c: fn(*c), chunks))
    if timings is not None:
        timings["map_s"] = timings.get("map_s", 0.0) + time.perf_counter() - t0
    return out


def viewpoint_field(points: np.ndarray, pose: Pose, cam: CameraModel,
                    boxes: Sequence[BoundingBox], kernel: KernelSpec) -> np.ndarray:
    """Un-normalised per-viewpoint likelihood ``1/N * sum_j kernel_j``.

    Cells behind the camera or projecting outside the image get 0.
    """
    u, v, in_front = world_to_pixels(points, pose, cam)
    visible = in_front & cam.in_image(u, v)
    inv_n = 1.0 / len(boxes)
    acc = np.zeros(len(points))
    for box in boxes:
        acc = acc + inv_n * kernel_eval(kernel, box, u, v)
    return np.where(visible, acc, 0.0)


def viewpoint_update(state: ProbabilityGrid, pose: Pose, cam: CameraModel, dets: DetectionSet,
                     kernel: KernelSpec, workers: int = 1,
                     executor: Optional[Executor] = None,
                     timings: Optional[dict] = None) -> ProbabilityGrid:
    """One filter step; returns a new state and leaves ``state`` untouched.

    If ``timings`` is a dict, the wall time spent inside the parallel cell
    maps is accumulated under ``"map_s"``.
    """
    boxes = dets.boxes
    if len(boxes) == 0:
        raise EmptyDetections(f"viewpoint {dets.viewpoint_index} has no detections")
    pts = state.grid.cell_centers
    prior = state.weights
    n = len(prior)
    field = np.empty(n)
    post = np.empty(n)

    def fill_field(lo, hi):
        field[lo:hi] = viewpoint_field(pts[lo:hi], pose, cam, boxes, kernel)
        return field[lo:hi].max(initial=0.0)

    fmax = max(_map_chunks(fill_field, n, workers, executor, timings))
    if not fmax > 0:
        raise DegenerateField(f"viewpoint {dets.viewpoint_index}: no cell projects into any box")

    def fill_post(lo, hi):
        post[lo:hi] = prior[lo:hi] * (field[lo:hi] / fmax)
        return post[lo:hi].max(initial=0.0)

    pmax = max(_map_chunks(fill_post, n, workers, executor, timings))
    if pmax > 0:
        def rescale(lo, hi):
            post[lo:hi] = post[lo:hi] / pmax
        _map_chunks(rescale, n, workers, executor, timings)
    else:
        log.warning("viewpoint %d: posterior collapsed to zero everywhere", dets.viewpoint_index)
    return ProbabilityGrid(state.grid, post)


def run_filter(schedule, detections: Union[Sequence[DetectionSet], Dict[int, DetectionSet]],
               cam: CameraModel, kernel: KernelSpec, grid: GridDecomposition,
               order: Optional[Iterable[int]] = None, prior: Optional[ProbabilityGrid] = None,
               trace: Optional[list] = None, workers: int = 1,
               executor: Optional[Executor] = None) -> ProbabilityGrid:
    """Fold :func:`viewpoint_update` over the viewpoints in ``order``.

    ``detections`` are matched to poses by ``viewpoint_index``.  Viewpoints
    with no boxes or a degenerate field are skipped with a warning.  When
    ``trace`` is a list, ``(viewpoint_index, state)`` is appended after each
    applied update.
    """
    if not isinstance(detections, dict):
        detections = {d.viewpoint_index: d for d in detections}
    poses = list(schedule)
    if order is None:
        order = range(len(poses))
    state = prior if prior is not None else ProbabilityGrid.uniform(grid)
    applied = 0
    own_pool = None
    if executor is None and workers > 1:
        own_pool = executor = ThreadPoolExecutor(max_workers=workers)
    try:
        for k in order:
            dets = detections.get(k, DetectionSet(k, ()))
            try:
                state = viewpoint_update(state, poses[k], cam, dets, kernel, workers, executor)
            except (EmptyDetections, DegenerateField) as exc:
                log.warning("skipping viewpoint %d: %s", k, exc)
                continue
            applied += 1
            if trace is not None:
                trace.append((k, state))
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    if applied < 2:
        raise InsufficientViewpoints(f"only {applied} viewpoint update(s) applied; need >= 2")
    return state


def write_trace_csv(state: ProbabilityGrid, path: Union[str, Path], threshold: float = 0.0) -> int:
    """Write cells with weight above ``threshold`` as ``x_m,y_m,z_m,weight``."""
    idx = np.flatnonzero(state.weights > threshold)
    pts = state.grid.cell_centers[idx]
    w = state.weights[idx]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x_m", "y_m", "z_m", "weight"])
        for p, wi in zip(pts, w):
            writer.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])), repr(float(wi))])
    return len(idx)
