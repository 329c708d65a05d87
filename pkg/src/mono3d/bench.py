"""Wall-time benchmark of the parallel cell map and Amdahl's-law analysis."""
from __future__ import annotations

import csv
import logging
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from .errors import InvalidInput, NondeterministicOutput
from .filter import KernelSpec, ProbabilityGrid, decompose, viewpoint_update
from .pipeline import DEFAULT_RESOLUTION_M, simulate_all

log = logging.getLogger(__name__)


def amdahl_bound(sigma: float, phi: float, p: int) -> float:
    """Upper bound on speedup with ``sigma`` s sequential and ``phi`` s parallel work on ``p`` workers."""
    if not (sigma >= 0 and phi >= 0 and sigma + phi > 0):
        raise InvalidInput("need sigma >= 0, phi >= 0 and sigma + phi > 0")
    if int(p) != p or p < 1:
        raise InvalidInput("p must be an integer >= 1")
    if p == 1:
        return 1.0
    if sigma == 0:
        return float(p)
    return (sigma + phi) / (sigma + phi / p)


def max_speedup(sigma: float, phi: float) -> float:
    """Limit of :func:`amdahl_bound` as ``p`` grows."""
    return math.inf if sigma == 0 else (sigma + phi) / sigma


def fit_amdahl(workers: Sequence[int], times: Sequence[float]):
    """Least-squares ``t(p) = sigma + phi / p`` with both terms kept non-negative."""
    p = np.asarray(workers, dtype=float)
    t = np.asarray(times, dtype=float)
    if len(p) == 1:
        return 0.0, float(t[0])
    a = np.column_stack([np.ones_like(p), 1.0 / p])
    (sigma, phi), *_ = np.linalg.lstsq(a, t, rcond=None)
    if sigma < 0:
        sigma, phi = 0.0, float((t / p).sum() / (1.0 / p**2).sum())
    elif phi < 0:
        sigma, phi = float(t.mean()), 0.0
    return float(sigma), float(phi)


@dataclass
class BenchResult:
    kernel: str
    worker_counts: List[int]
    wall_times: List[float]
    sigma_n: float
    phi_n: float
    max_speedup: float
    # sequential / parallel split measured directly on the 1-worker runs
    profiled_sigma: float = 0.0
    profiled_phi: float = 0.0
    n_cells: int = 0
    cpu_count: int = field(default_factory=lambda: os.cpu_count() or 1)

    def speedups(self) -> List[float]:
        t1 = self.wall_times[self.worker_counts.index(1)]
        return [t1 / t for t in self.wall_times]


def run_bench(scenario, kernel: KernelSpec, worker_counts: Sequence[int] = (1, 2, 4, 8),
              repetitions: int = 3, resolution: float = DEFAULT_RESOLUTION_M) -> BenchResult:
    """Time every viewpoint update for each worker count.

    The posterior of every worker count must equal the 1-worker posterior
    bit for bit; otherwise :class:`NondeterministicOutput` is raised.
    """
    if repetitions < 3:
        raise InvalidInput("repetitions must be >= 3")
    counts = sorted(set(int(w) for w in worker_counts) | {1})
    if counts[0] < 1:
        raise InvalidInput("worker counts must be >= 1")
    dets = simulate_all(scenario)
    grid = decompose(scenario.schedule[0], scenario.scene.reach, resolution)
    grid.cell_centers  # build once, outside the timed region
    poses = list(scenario.schedule)

    medians, reference = [], None
    prof_total, prof_map = [], []
    for w in counts:
        pool = ThreadPoolExecutor(max_workers=w) if w > 1 else None
        samples = []
        try:
            for _ in range(repetitions):
                state = ProbabilityGrid.uniform(grid)
                for d in dets:
                    if not d.boxes:
                        continue
                    timings: Dict[str, float] = {}
                    t0 = time.perf_counter()
                    state = viewpoint_update(state, poses[d.viewpoint_index], scenario.camera, d,
                                             kernel, workers=w, executor=pool, timings=timings)
                    dt = time.perf_counter() - t0
                    samples.append(dt)
                    if w == 1:
                        prof_total.append(dt)
                        prof_map.append(timings.get("map_s", 0.0))
                if reference is None:
                    reference = state.weights.copy()
                elif not np.array_equal(reference.view(np.uint64), state.weights.view(np.uint64)):
                    raise NondeterministicOutput(f"posterior with {w} workers differs from 1 worker")
        finally:
            if pool is not None:
                pool.shutdown()
        medians.append(statistics.median(samples))
        log.info("kernel=%s workers=%d median=%.4fs", kernel.kind, w, medians[-1])

    sigma, phi = fit_amdahl(counts, medians)
    p_total = statistics.median(prof_total)
    p_map = min(statistics.median(prof_map), p_total)
    return BenchResult(kernel.kind, counts, medians, sigma, phi, max_speedup(sigma, phi),
                       profiled_sigma=p_total - p_map, profiled_phi=p_map, n_cells=grid.n_cells)


def write_bench_csv(results: Union[BenchResult, Sequence[BenchResult]], path: Union[str, Path]) -> None:
    if isinstance(results, BenchResult):
        results = [results]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kernel", "workers", "median_wall_s", "speedup"])
        for r in results:
            for p, t, s in zip(r.worker_counts, r.wall_times, r.speedups()):
                w.writerow([r.kernel, p, repr(t), repr(s)])
        for r in results:
            fh.write(
                f"# fit kernel={r.kernel} sigma_s={r.sigma_n!r} phi_s={r.phi_n!r} "
                f"max_speedup={r.max_speedup!r} profiled_sigma_s={r.profiled_sigma!r} "
                f"profiled_phi_s={r.profiled_phi!r} "
                f"profiled_max_speedup={max_speedup(r.profiled_sigma, r.profiled_phi)!r}\n"
            )
