"""Exception hierarchy shared by all fffwidth modules.

Three branches map onto the CLI exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class FffWidthError(Exception):
    """Base class for all package errors."""


class ConfigError(FffWidthError):
    """Invalid configuration or usage."""


class DataError(FffWidthError):
    """Malformed, inconsistent, or insufficient input data."""


class NumericalError(FffWidthError):
    """A numerical procedure failed or did not converge."""


# --- dataset ---------------------------------------------------------------

class MissingColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing required column {column!r}")


class NonNumericCell(DataError):
    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-numeric value at row {row}, column {col!r}")


class NonPositiveValue(DataError):
    def __init__(self, row, col):
        self.row = row
        self.col = col
        super().__init__(f"non-positive value at row {row}, column {col!r}")


class EmptyDataset(DataError):
    pass


class InvalidSize(DataError):
    pass


class NotAGrid(DataError):
    pass


class TooFewLevels(DataError):
    pass


class LengthMismatch(DataError):
    pass


# --- svr -------------------------------------------------------------------

class WeightMismatch(DataError):
    pass


class TooFewSamples(DataError):
    pass


class EmptyGrid(ConfigError):
    pass


class DidNotConverge(NumericalError):
    """Solver hit its iteration cap.

    The model reached at the cap is attached for diagnostics.
    """

    def __init__(self, model, iterations, max_violation):
        self.model = model
        self.iterations = iterations
        self.max_violation = max_violation
        super().__init__(
            f"SMO did not converge after {iterations} iterations "
            f"(max KKT violation {max_violation:.3e})"
        )


# --- transfer --------------------------------------------------------------

class StopBoosting(FffWidthError):
    """Terminal boosting signal (target-weighted error >= 0.5), not a failure."""

    def __init__(self, epsilon_t):
        self.epsilon_t = epsilon_t
        super().__init__(f"boosting stopped: target error {epsilon_t:.4f} >= 0.5")


class AllTargetWeightZero(NumericalError):
    pass


class EnsembleEmpty(NumericalError):
    pass


# --- sourcegen / protocol --------------------------------------------------

class NonPositiveInput(DataError):
    pass


class InvalidRange(ConfigError):
    pass


class InvalidGrid(ConfigError):
    pass


class InsufficientData(DataError):
    pass
