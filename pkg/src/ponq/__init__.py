"""Point-normal-quadric surface reconstruction toolkit.

Pipeline: sample an input surface, fit generator points by Chamfer descent,
enrich them with per-cell normals and quadrics, then extract a watertight,
intersection-free triangle mesh from a tetrahedralization of the
quadric-optimal vertices.  Includes pooling-based simplification, open
surface support, and an evaluation suite.
"""

from .errors import (DegenerateQuadricError, DegenerateSimplexError,
                     DivergenceError, EmptyInteriorError, EmptyMeshError,
                     EmptySurfaceError, FileFormatError, InvalidInputError,
                     NoBoundaryError, PonqError)
from .quadric import (PlaneConstraint, Quadric, anisotropy, evaluate,
                      minimizer, normalize, plane_quadric, quadric_sum,
                      residual_at_minimizer)

__version__ = "0.1.0"
