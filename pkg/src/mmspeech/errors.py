"""Exception hierarchy shared across the package.

The CLI maps ValidationError (and subclasses) to exit code 1 and OSError
to exit code 2; everything else is a bug.
"""


class PipelineError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(PipelineError):
    """Input data or parameters violate a documented contract."""


class UnsupportedFormatError(ValidationError):
    """File exists and is readable but is not in an accepted format."""


class EmptyDatasetError(ValidationError):
    """An operation that needs at least one instance received none."""


class MissingFeature(PipelineError):
    """A feature cannot be computed for one instance.

    Callers catch this, log the reason, and drop the instance; it never
    aborts a whole run.
    """


class TrainingFailure(PipelineError):
    """Model training diverged or could not be completed."""
