"""
Worker scaling and Amdahl's bound
=================================

Each viewpoint update is timed for several thread counts.  The posterior
must not change by a single bit, and the timings are fitted with
t(p) = sigma + phi / p to estimate the best achievable speedup.
"""

import os

from mono3d import KernelSpec, load_scene, bundled_scenario_path
from mono3d.bench import amdahl_bound, run_bench

scenario = load_scene(bundled_scenario_path())
cores = os.cpu_count() or 1
workers = sorted({1, 2, 4, cores})
print(f"{cores} core(s) visible; trying workers {workers}")

res = run_bench(scenario, KernelSpec.gaussian(2.0), workers, repetitions=3, resolution=0.01)
for p, t, s in zip(res.worker_counts, res.wall_times, res.speedups()):
    print(f"{p:3d} workers  {t * 1e3:7.1f} ms per viewpoint  speedup {s:4.2f}")

print(f"fit: sigma={res.sigma_n * 1e3:.2f} ms  phi={res.phi_n * 1e3:.2f} ms  limit {res.max_speedup:.1f}x")
print(f"profiled: sigma={res.profiled_sigma * 1e3:.3f} ms  phi={res.profiled_phi * 1e3:.2f} ms")

# what the profiled split would allow on larger machines
for p in (2, 4, 8, 16, 64):
    print(f"  bound at {p:2d} workers: {amdahl_bound(res.profiled_sigma, res.profiled_phi, p):5.2f}x")
