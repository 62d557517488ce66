"""Hierarchical optimised Schwarz preconditioning for 2D Helmholtz problems with
coarse spaces built by randomized SVD of interface maps."""

from .decomposition import LevelSpec, build_hierarchy
from .fem import Constant, LayeredY, RectMesh, assemble_global, planewave_problem, random_problem
from .pipeline import MethodParams, run_case, setup, solve

__all__ = [
    "Constant", "LayeredY", "LevelSpec", "MethodParams", "RectMesh", "assemble_global",
    "build_hierarchy", "planewave_problem", "random_problem", "run_case", "setup", "solve",
]
