"""Exception hierarchy. Each family maps to a CLI exit code."""


class PourSkillError(Exception):
    exit_code = 1


class UsageError(PourSkillError):
    exit_code = 2


class ValidationError(PourSkillError, ValueError):
    """Bad input: geometry, measurements, infeasible tasks, short data."""

    exit_code = 3


class InvalidGeometryError(ValidationError):
    pass


class InvalidMeasurementError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class InfeasibleContainerError(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class NumericError(ValidationError, ArithmeticError):
    pass


class ConfigurationError(ValidationError):
    pass


class DemoFailureError(PourSkillError):
    exit_code = 3


class CorruptCheckpointError(PourSkillError):
    exit_code = 3


class TrainingFailureError(PourSkillError):
    """Loss or gradient went non-finite. Carries the last good snapshot."""

    exit_code = 4

    def __init__(self, message, last_good=None, param_name=None):
        super().__init__(message)
        self.last_good = last_good
        self.param_name = param_name


class AcceptanceFailure(PourSkillError):
    exit_code = 5
