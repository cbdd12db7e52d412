"""Exception hierarchy for the svdshape package.

All package errors derive from ShapeAnalysisError so callers can catch
broadly.  Parse/configuration problems and numerical failures are kept
separate because the CLI maps them to distinct exit codes.
"""


class ShapeAnalysisError(Exception):
    """Base class for all svdshape errors."""


class ConfigError(ShapeAnalysisError):
    """Invalid run configuration (bad flag combinations, unknown keys)."""


class ParseError(ShapeAnalysisError):
    """Malformed input file.

    Carries ``line`` (1-based line number, or None) and ``path`` when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc = f" [{loc}]"
        super().__init__(f"{message}{loc}")


class ContractViolationError(ShapeAnalysisError):
    """An argument violates a documented precondition."""


class InvalidDimensionError(ContractViolationError):
    """Matrix or landmark dimensions outside the supported range."""


class DecompositionError(ShapeAnalysisError):
    """A required matrix factorization failed (e.g. non-SPD covariance)."""


class DegenerateFigureError(ShapeAnalysisError):
    """All landmarks coincide: the centered figure is the zero matrix."""


class DomainError(ContractViolationError):
    """Function evaluated outside its mathematical domain."""


class CapacityError(ShapeAnalysisError):
    """Requested series degree exceeds the configured hard cap."""


class TruncationError(ShapeAnalysisError):
    """A series did not meet its tail tolerance within ``max_degree``.

    Carries the partial sum so callers can inspect how far evaluation got.
    """

    def __init__(self, message, partial_value, tail_estimate, degree_used):
        self.partial_value = partial_value
        self.tail_estimate = tail_estimate
        self.degree_used = degree_used
        super().__init__(
            f"{message} (partial={partial_value!r}, "
            f"tail={tail_estimate!r}, degree={degree_used})"
        )


class EvaluationError(ShapeAnalysisError):
    """Likelihood evaluation failed for a specific specimen.

    ``specimen`` identifies the offending sample member when known.
    """

    def __init__(self, message, specimen=None):
        self.specimen = specimen
        if specimen is not None:
            message = f"{message} (specimen {specimen!r})"
        super().__init__(message)
