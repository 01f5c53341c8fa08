"""Exception and warning types shared across the pipeline.

The CLI maps these onto distinct exit codes (see dewarp.cli).
"""


class DewarpError(Exception):
    """Base class for all pipeline errors."""


class MissingInputError(DewarpError):
    """A required input file is absent or unreadable."""


class DimensionMismatchError(DewarpError):
    """Two inputs that must share dimensions do not."""


class EmptyMaskError(DewarpError):
    """A mask with no foreground pixels where foreground is required."""


class DegenerateInputError(DewarpError):
    """Input admits no meaningful result (e.g. constant mask, no split exists)."""


class DegenerateGeometryError(DewarpError):
    """Geometry too small or too flat to proceed (collinear points, <4 corners...)."""


class GridFailureError(DewarpError):
    """Too few grid intersections found; document geometry unrecoverable."""


class DewarpWarning(UserWarning):
    """Base class for recoverable-condition warnings."""


class FoldWarning(DewarpWarning):
    """Warp grid is non-monotone (fold); interpolation clamped."""


class RankDeficientFitWarning(DewarpWarning):
    """Polynomial fit design matrix was rank deficient; solved with regularization."""


class ShortWindowWarning(DewarpWarning):
    """Too few samples for the smoothing window; data passed through unchanged."""
