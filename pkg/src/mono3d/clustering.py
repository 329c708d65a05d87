"""Turning surviving grid cells into per-object position estimates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import EmptyCluster, NoDetections, NoSurvivors, TooFewPoints, ZeroWeightSum

N_RESTARTS = 10
MAX_ITER = 300
TOL_M = 1e-9


@dataclass(frozen=True)
class WeightedPoints:
    """Surviving cells: ``positions`` is ``(n, 3)`` metres, ``weights`` is ``(n,)``."""

    positions: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, idx):
        return WeightedPoints(self.positions[idx], self.weights[idx])


@dataclass(frozen=True)
class Cluster:
    members: WeightedPoints
    geometric_center: np.ndarray
    weighted_center: np.ndarray


@dataclass(frozen=True)
class ClusterResult:
    clusters: List[Cluster]
    labels: np.ndarray
    inertia: float
    n_iter: int

    @property
    def geometric_centers(self) -> np.ndarray:
        return np.array([c.geometric_center for c in self.clusters])

    @property
    def weighted_centers(self) -> np.ndarray:
        return np.array([c.weighted_center for c in self.clusters])


def extract_points(state, threshold: float = 0.5) -> WeightedPoints:
    """Cells whose weight is strictly above ``threshold``."""
    if not (0.0 <= threshold < 1.0):
        raise ValueError("threshold must lie in [0, 1)")
    idx = np.flatnonzero(state.weights > threshold)
    if idx.size == 0:
        raise NoSurvivors(f"no cell has weight above {threshold}")
    return WeightedPoints(state.grid.cell_centers[idx].copy(), state.weights[idx].copy())


def weighted_center(members: WeightedPoints, divide_by: str = "weights") -> np.ndarray:
    """Weighted average of member positions.

    ``divide_by="count"`` divides the weighted sum by the member count
    instead of the weight total (kept only for comparison; it pulls the
    estimate towards the origin whenever weights are below one).
    """
    if len(members) == 0:
        raise EmptyCluster("cannot take the centre of an empty cluster")
    w = np.asarray(members.weights, dtype=float)
    x = np.asarray(members.positions, dtype=float)
    s = w.sum()
    if divide_by == "count":
        return (w[:, None] * x).sum(axis=0) / len(w)
    if not s > 0:
        raise ZeroWeightSum("cluster weights sum to zero")
    return (w[:, None] * x).sum(axis=0) / s


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = x[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", d, d)


def _farthest_point_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    dmin = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        nxt = x[int(np.argmax(dmin))]
        centers.append(nxt)
        dmin = np.minimum(dmin, ((x - nxt) ** 2).sum(axis=1))
    return np.array(centers)


def lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = MAX_ITER, tol: float = TOL_M):
    """Lloyd iterations from ``centers``; returns ``(centers, labels, inertia, n_iter)``.

    Inertia never increases; an assertion guards that.  An emptied cluster
    is re-seeded at the point currently worst served.
    """
    centers = centers.astype(float).copy()
    k = len(centers)
    d2 = _sq_dists(x, centers)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(x)), labels].sum())
    it = 0
    for it in range(1, max_iter + 1):
        new = centers.copy()
        for j in range(k):
            mask = labels == j
            if mask.any():
                new[j] = x[mask].mean(axis=0)
            else:
                cost = d2[np.arange(len(x)), labels]
                new[j] = x[int(np.argmax(cost))]
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        d2 = _sq_dists(x, centers)
        new_labels = d2.argmin(axis=1)
        new_inertia = float(d2[np.arange(len(x)), new_labels].sum())
        assert new_inertia <= inertia * (1 + 1e-12) + 1e-15, "k-means inertia increased"
        stable = np.array_equal(new_labels, labels)
        labels, inertia = new_labels, new_inertia
        if stable or shift < tol:
            break
    return centers, labels, inertia, it


def kmeans(points: WeightedPoints, k: int, seed: int = 0, n_restarts: int = N_RESTARTS) -> ClusterResult:
    """k-means with farthest-point seeding and restarts; best inertia wins.

    Restart ``r`` draws its first centre from ``default_rng(seed + r)``;
    ties in inertia go to the earliest restart.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x = np.asarray(points.positions, dtype=float)
    if len(x) < k:
        raise TooFewPoints(f"{len(x)} points cannot form {k} clusters")
    best = None
    for r in range(n_restarts):
        rng = np.random.default_rng(seed + r)
        res = lloyd(x, _farthest_point_init(x, k, rng))
        if best is None or res[2] < best[2]:
            best = res
    _, labels, inertia, n_iter = best
    clusters = []
    for j in range(k):
        members = points[labels == j]
        if len(members) == 0:
            raise EmptyCluster(f"cluster {j} ended empty")
        geo = members.positions.mean(axis=0)
        clusters.append(Cluster(members, geo, weighted_center(members)))
    return ClusterResult(clusters, labels, inertia, n_iter)


def object_count(detections: Sequence) -> int:
    """Number of objects = largest box count seen from any viewpoint."""
    k = max((len(d.boxes) for d in detections), default=0)
    if k == 0:
        raise NoDetections("no viewpoint produced any bounding box")
    return k
