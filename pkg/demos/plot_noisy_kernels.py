"""
Kernels under detector noise
============================

Box centres and sizes are jittered and a few boxes are dropped.  A hard
box mask then tends to cut true positions away, while the Gaussian kernel
only lowers their weight.
"""

import statistics

from mono3d import KernelSpec, NoiseModel, compute_errors, load_scene, match_estimates, bundled_scenario_path
from mono3d.errors import AlgorithmError
from mono3d.pipeline import estimate, scenario_grid, simulate_all

scenario = load_scene(bundled_scenario_path("sim6_noisy.scenario"))
grid = scenario_grid(scenario, 0.02)
noise = scenario.noise
print(f"noise: centre sigma {noise.center_sigma}, size sigma {noise.size_sigma}, dropout {noise.dropout_prob}")

variants = {
    "square / geometric": (KernelSpec.square(), "geometric"),
    "gaussian(3) / weighted": (KernelSpec.gaussian(3.0), "weighted"),
}
scores = {name: [] for name in variants}

for seed in range(10):
    dets = simulate_all(scenario, NoiseModel(noise.center_sigma, noise.size_sigma, noise.dropout_prob, seed))
    for name, (kernel, center) in variants.items():
        try:
            est = estimate(scenario, dets, kernel, grid, center=center)
        except AlgorithmError as exc:
            print(f"seed {seed}: {name} produced no estimate ({type(exc).__name__})")
            scores[name].append(float("inf"))
            continue
        scores[name].append(compute_errors(match_estimates(scenario.scene.centers(), est.centers)).mae)

for name, maes in scores.items():
    print(f"{name:<24} median MAE {statistics.median(maes) * 1e3:6.1f} mm")
