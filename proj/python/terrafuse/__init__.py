"""Terrain mapping and traversability estimation from LiDAR scans."""

from ._core import Config, bgk_posterior, predictive, run_scene, scene_names, sparse_kernel

TRAVERSABLE = 1
NON_TRAVERSABLE = 2
UNREACHABLE = 3

__all__ = [
    "Config",
    "bgk_posterior",
    "predictive",
    "run_scene",
    "scene_names",
    "sparse_kernel",
    "TRAVERSABLE",
    "NON_TRAVERSABLE",
    "UNREACHABLE",
]
