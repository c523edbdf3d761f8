"""Exception hierarchy. CLI exit codes key off these classes."""


class RFFRCError(Exception):
    exit_code = 1


class InvalidArgument(RFFRCError, ValueError):
    exit_code = 2


class ConfigError(InvalidArgument):
    pass


class EmbeddingError(InvalidArgument):
    """Series too short for the requested embedding."""


class NumericalError(RFFRCError, ArithmeticError):
    exit_code = 3


class DivergenceError(NumericalError):
    def __init__(self, msg: str, step: int | None = None):
        super().__init__(msg if step is None else f"{msg} (step {step})")
        self.step = step


class IllConditionedError(NumericalError):
    pass


class ClosedLoopInfeasible(InvalidArgument):
    pass


class ModelFormatError(RFFRCError, IOError):
    exit_code = 4


class ChecksumError(ModelFormatError):
    pass


class VersionError(ModelFormatError):
    pass
