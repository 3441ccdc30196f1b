"""Exception types shared across the package."""


class CrowdmarkError(Exception):
    """Base class for every error this package raises on purpose."""


class FormatError(CrowdmarkError):
    """Input bytes violate the expected file format."""


class ParseError(CrowdmarkError):
    """Annotation text could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(CrowdmarkError):
    """Well-formed input violates a domain invariant."""


class ParameterError(CrowdmarkError):
    """A caller-supplied parameter is out of range."""


class InsufficientPointsError(ParameterError):
    """The operation needs more points than the set contains."""


class DegenerateRegionError(CrowdmarkError):
    """A segmentation region collapsed to an unusable state."""


class GenerationError(CrowdmarkError):
    """Pipeline failure attributed to a specific head."""

    def __init__(self, head_index, cause):
        super().__init__(f"head {head_index}: {cause}")
        self.head_index = head_index
