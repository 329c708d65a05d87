"""
Localising six spheres from three views
=======================================

Simulated boxes from the bundled scene are fed through the histogram
filter, the surviving cells are clustered, and each cluster centre is
compared with the true sphere centre.
"""

import numpy as np

from mono3d import KernelSpec, compute_errors, load_scene, match_estimates, bundled_scenario_path
from mono3d.pipeline import estimate, scenario_grid, simulate_all

scenario = load_scene(bundled_scenario_path())
grid = scenario_grid(scenario, 0.01)
print(f"grid: {grid.dims} cells of {grid.resolution * 100:.0f} cm, centred at {np.round(grid.center, 3)}")

# one set of boxes per viewpoint, no noise
detections = simulate_all(scenario)
for d in detections:
    print(f"viewpoint {d.viewpoint_index}: {len(d)} boxes")

###############################################################################
# Square kernel against Gaussian kernel, geometric against weighted centres

for kind in ("square", "gaussian"):
    for center in ("geometric", "weighted"):
        est = estimate(scenario, detections, KernelSpec(kind, 2.0), grid, center=center)
        report = compute_errors(match_estimates(scenario.scene.centers(), est.centers))
        axes = "  ".join(f"{a}={report.per_axis[a]['mae'] * 1e3:5.2f}" for a in "xyz")
        print(f"{kind:>8} / {center:<9} MAE mm: {axes}   mean distance {report.mean_euclidean * 1e3:.2f} mm")

###############################################################################
# How much of the grid survives each step

trace = []
estimate(scenario, detections, KernelSpec.square(), grid, trace=trace)
for step, (k, state) in enumerate(trace):
    print(f"after viewpoint {k}: {(state.weights > 0.5).sum():7d} cells above 0.5")
