"""
Replaying recorded detections
=============================

Boxes from a real detector can be stored as JSON and replayed against the
same viewpoints.  Here the file is produced from the simulator, written to
a temporary directory and run through the command-line entry point.
"""

import json
import tempfile
from pathlib import Path

from mono3d import NoiseModel, load_scene, bundled_scenario_path
from mono3d.cli import main
from mono3d.detection import detections_to_dict
from mono3d.pipeline import simulate_all

scenario = load_scene(bundled_scenario_path())
sets = simulate_all(scenario, NoiseModel(0.01, 0.02, 0.0, 5))

work = Path(tempfile.mkdtemp())
det_file = work / "detections.json"
det_file.write_text(json.dumps(detections_to_dict(sets), indent=2))
print(f"wrote {sum(len(d) for d in sets)} boxes to {det_file}")

code = main([
    "replay",
    "--scenario", str(bundled_scenario_path()),
    "--detections", str(det_file),
    "--kernel", "gaussian",
    "--out", str(work / "out"),
])
print(f"exit code {code}")
print((work / "out" / "estimates.csv").read_text())
