"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for errors raised by this package."""


class InvalidSpaceError(PipelineError):
    """An operation received a raster in a color space it does not accept."""


class NoSeedsError(PipelineError):
    """Seed selection produced neither strong nor weak candidates."""


class InvalidGroundTruthError(PipelineError):
    """A ground-truth mask is unusable (wrong values, empty, unreadable)."""
