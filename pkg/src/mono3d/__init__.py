"""Monocular multi-view 3D object localisation with a histogram filter."""

__version__ = "0.1.0"

from .clustering import extract_points, kmeans, object_count, weighted_center
from .detection import BoundingBox, DetectionSet, NoiseModel, apply_noise, load_detections, simulate_detections
from .filter import GridDecomposition, KernelSpec, ProbabilityGrid, decompose, kernel_eval, run_filter, viewpoint_update
from .geometry import CameraModel, Pose, Quaternion, camera_to_sensor, focal_from_hfov, project, world_to_camera
from .metrics import compute_errors, match_estimates
from .scene import Scenario, Scene, SceneObject, ViewpointSchedule, bundled_scenario_path, load_scene
