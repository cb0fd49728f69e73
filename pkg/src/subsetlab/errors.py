"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`SubsetLabError` so callers
(and the CLI) can distinguish our failures from genuine bugs.  A few classes
double as standard exceptions (``ValueError``) so idiomatic ``except`` clauses
keep working.
"""


class SubsetLabError(Exception):
    """Base class for all errors raised by subsetlab."""


class InvalidParameterError(SubsetLabError, ValueError):
    """A scalar or structural argument is outside its documented domain."""


class MatrixFormatError(SubsetLabError, ValueError):
    """A matrix/dataset file could not be parsed."""


class AsymmetricMatrixError(SubsetLabError, ValueError):
    """A matrix that must be symmetric differs from its transpose too much."""


class NotPositiveDefiniteError(SubsetLabError, ValueError):
    """Cholesky failed; carries the smallest eigenvalue when available."""

    def __init__(self, message: str, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class EmptyDifferenceError(SubsetLabError, ValueError):
    """S \\ T is empty where a nonempty difference set is required."""


class BudgetExceededError(SubsetLabError):
    """A combinatorial enumeration would exceed its configured budget.

    Enumerations are refused outright rather than silently sampled; a partial
    scan would not certify the exact minimum the callers rely on.
    """

    def __init__(self, message: str, required: int, budget: int):
        super().__init__(message)
        self.required = required
        self.budget = budget


class SingularSupportError(SubsetLabError):
    """The Gram submatrix for a selected support is numerically singular."""

    def __init__(self, support):
        super().__init__(f"singular Gram submatrix for support {tuple(support)}")
        self.support = tuple(support)


class NoCrossingError(SubsetLabError):
    """A success-rate curve never crosses the requested level on the grid."""


class ConfigError(SubsetLabError, ValueError):
    """A sweep configuration file is malformed or contains unknown keys."""


class InternalConsistencyError(SubsetLabError):
    """Two quantities that must agree by construction do not.

    Raised only by self-checks (for example a minimum signal falling below
    the floor implied by the class parameters); seeing it means a bug, not a
    user error.
    """
