"""Exception types raised across the package."""


class CodedCachingError(ValueError):
    """Base class for all domain errors."""


class InvalidTopologyError(CodedCachingError):
    pass


class InvalidParametersError(CodedCachingError):
    pass


class InconsistentPolicyError(CodedCachingError):
    pass


class InvalidFeasibleSetError(CodedCachingError):
    pass


class InstanceTooLargeError(CodedCachingError):
    pass


class InfeasibleObjectiveError(CodedCachingError):
    pass


class UndefinedUtilityError(CodedCachingError):
    pass


class OracleScaleExceededError(CodedCachingError):
    pass


class ScheduleSchemaError(CodedCachingError):
    pass


class ConfigError(CodedCachingError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
