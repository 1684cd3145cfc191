"""Exception types shared across the package."""


class CapnmpcError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(CapnmpcError, ValueError):
    """Non-finite or out-of-domain input to a dynamics/estimator operation."""


class ModelFormatError(CapnmpcError, ValueError):
    """Weights file failed to parse or violates a structural invariant.

    The message names the offending field.
    """


class DegenerateHorizonError(CapnmpcError, RuntimeError):
    """Every particle received -inf log-weight at some horizon step."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"all particle weights vanished at horizon step {step}")


class DegenerateSmoothingError(CapnmpcError, RuntimeError):
    """Backward reweighting hit a zero denominator."""


class InvalidTrajectoryError(CapnmpcError, ValueError):
    """Trajectory passed for evaluation is not dynamics-consistent."""


class ConfigError(CapnmpcError, ValueError):
    """Invalid run configuration (CLI or scenario definition)."""
