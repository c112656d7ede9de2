"""Exception hierarchy shared across the package."""


class LingallocError(Exception):
    """Base class for all package-specific errors."""


class ParseError(LingallocError):
    """A data file line/row could not be parsed."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class FormatError(LingallocError):
    """A data file does not match its expected overall format."""


class ConfigError(LingallocError):
    """Invalid configuration or unsatisfiable budget/allocation request."""


class DataError(LingallocError):
    """A data-structure invariant was violated (pool partitions, tree shape)."""


class EvaluationError(LingallocError):
    """Metric inputs are inconsistent (length or token-count mismatch)."""


class ScoringError(LingallocError):
    """An acquisition score was requested on invalid model output."""


class ModelStateError(LingallocError):
    """Prediction requested from a model that has no weights yet."""


class InfeasibleTreeError(LingallocError):
    """No valid single-root arborescence exists for the given scores."""


class NumericalError(LingallocError):
    """A numerical computation failed (singular or ill-conditioned system)."""
