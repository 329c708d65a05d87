"""End-to-end estimation: detections -> filter -> clusters -> centres."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .clustering import ClusterResult, extract_points, kmeans, object_count
from .detection import DetectionSet, NoiseModel, apply_noise, derive_seed, simulate_detections
from .filter import GridDecomposition, KernelSpec, ProbabilityGrid, decompose, run_filter

DEFAULT_RESOLUTION_M = 0.01
DEFAULT_THRESHOLD = 0.5


@dataclass
class Estimate:
    centers: np.ndarray
    clusters: ClusterResult
    state: ProbabilityGrid
    k: int


def scenario_grid(scenario, resolution: float = DEFAULT_RESOLUTION_M) -> GridDecomposition:
    return decompose(scenario.schedule[0], scenario.scene.reach, resolution)


def simulate_all(scenario, noise: Optional[NoiseModel] = None, run: int = 0) -> List[DetectionSet]:
    """Detections for every viewpoint; noise seeds derive from ``(seed, run, viewpoint)``."""
    sets = []
    for i, pose in enumerate(scenario.schedule):
        d = simulate_detections(scenario.scene, pose, scenario.camera, viewpoint_index=i)
        if noise is not None and not noise.is_identity:
            child = NoiseModel(noise.center_sigma, noise.size_sigma, noise.dropout_prob,
                               derive_seed(noise.rng_seed, run, i))
            d = apply_noise(d, child, scenario.camera)
        sets.append(d)
    return sets


def estimate(scenario, detections: Sequence[DetectionSet], kernel: KernelSpec,
             grid: GridDecomposition, threshold: float = DEFAULT_THRESHOLD,
             center: str = "weighted", seed: int = 0, order=None,
             trace: Optional[list] = None, workers: int = 1) -> Estimate:
    state = run_filter(scenario.schedule, detections, scenario.camera, kernel, grid,
                       order=order, trace=trace, workers=workers)
    k = object_count(detections)
    pts = extract_points(state, threshold)
    res = kmeans(pts, k, seed=seed)
    if center == "weighted":
        centers = res.weighted_centers
    elif center == "geometric":
        centers = res.geometric_centers
    else:
        raise ValueError(f"unknown centre method {center!r}")
    return Estimate(centers, res, state, k)
