"""Numerical laboratory for self-similar fractals.

Computes similarity dimensions and complex dimensions of self-similar
iterated function systems (von Koch curves and snowflakes in particular),
measures tube volumes and heat content on their regions, verifies the
scaling-functional-equation machinery (truncated Mellin transforms,
zeta-function factorization, pointwise explicit formulas), and
cross-checks everything against analytic oracles.
"""

__version__ = "0.1.0"

from .ifs import (PointCloud, SelfSimilarSystem, Similitude2, apply,
                  attractor_points, hausdorff_distance, hutchinson)
from .sampled import SampledFunction, antiderivative, geometric_grid
from .vonkoch import (GKCParams, PrefractalCurve, SnowflakeRegion,
                      build_system, prefractal, sector_region,
                      self_avoidance_bound, snowflake)
from .zeta import (ComplexDimensionSet, DirichletPoly, LatticeStructure,
                   RatioMultiset, detect_lattice, lattice_poles,
                   lower_similarity_dimension, nonlattice_poles, rescale,
                   residue_simple, screen_lower_bound,
                   similarity_dimension, zeta_eval)

__all__ = [
    "__version__",
    "PointCloud", "SelfSimilarSystem", "Similitude2", "apply",
    "attractor_points", "hausdorff_distance", "hutchinson",
    "SampledFunction", "antiderivative", "geometric_grid",
    "GKCParams", "PrefractalCurve", "SnowflakeRegion", "build_system",
    "prefractal", "sector_region", "self_avoidance_bound", "snowflake",
    "ComplexDimensionSet", "DirichletPoly", "LatticeStructure",
    "RatioMultiset", "detect_lattice", "lattice_poles",
    "lower_similarity_dimension", "nonlattice_poles", "rescale",
    "residue_simple", "screen_lower_bound", "similarity_dimension",
    "zeta_eval",
]
