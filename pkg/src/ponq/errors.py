"""Exception hierarchy shared by all pipeline stages."""


class PonqError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(PonqError):
    """Arguments violate a documented precondition."""


class DegenerateQuadricError(PonqError):
    """Quadric has no usable quadratic part (A is effectively zero)."""


class EmptySurfaceError(PonqError):
    """Mesh has no sampleable area (all triangles degenerate or absent)."""


class NoBoundaryError(PonqError):
    """Boundary sampling requested on a closed mesh."""


class DivergenceError(PonqError):
    """Optimization produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class DegenerateSimplexError(PonqError):
    """A tetrahedron (or triangle) is exactly flat where geometry is required."""


class EmptyInteriorError(PonqError):
    """No tetrahedron was tagged inside; the reconstruction has no volume."""


class EmptyMeshError(PonqError):
    """Surface extraction produced zero boundary faces."""


class FileFormatError(PonqError):
    """On-disk payload is malformed or fails a format invariant."""
