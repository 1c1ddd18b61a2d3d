"""Exception types shared across the package."""


class StyleFuseError(Exception):
    """Base class for all package errors."""


class DimensionError(StyleFuseError):
    """Shapes of the operands are inconsistent."""


class ContractError(StyleFuseError):
    """A documented precondition was violated."""


class DegenerateGeometryError(StyleFuseError):
    """Geometric input admits no well-defined solution (collinear/coincident points)."""


class WeightLoadError(StyleFuseError):
    """A required weight entry is missing or malformed."""


class DivergenceError(StyleFuseError):
    """Optimization produced a non-finite loss."""

    def __init__(self, iteration, trace):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


class FileFormatError(StyleFuseError):
    """A file could not be parsed in its declared format."""
