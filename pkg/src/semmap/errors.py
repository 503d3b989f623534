class EvaluationError(ValueError):
    """Inputs are well-formed but cannot be evaluated together."""


class FormatError(ValueError):
    """A file could not be parsed into an in-memory object."""
