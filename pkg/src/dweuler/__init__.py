"""Finite-volume solvers for the 2D compressible Euler equations on the
unit torus, with the full averaged-refinement diagnostic pipeline:
Cesaro averages across mesh resolutions, Reynolds-stress and energy defect
fields, weak-form consistency residuals, relative energy and Wasserstein
distances between per-cell empirical measures.
"""

from ._kernels import BACKEND_NAME

__version__ = "0.1.0"

__all__ = ["BACKEND_NAME", "__version__"]
