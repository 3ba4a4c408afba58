"""Analytic scenes with exact occupancy, camera rigs and ground-truth datasets."""

from .oracle import Primitive, SceneOracle, oracle_occupancy_grid, PRIMITIVE_KINDS
from .library import library_path, load_scene, available_scenes
from .cameras import CameraRig
from .dataset import Dataset, make_dataset, image_name, depth_name
