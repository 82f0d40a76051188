"""Exception hierarchy.

Errors fall into three families that map onto the CLI exit codes:
configuration problems (2), bad input data (3) and numerical failures (4).
"""


class J3SError(Exception):
    exit_code = 1


class ConfigError(J3SError):
    exit_code = 2


class DataError(J3SError):
    exit_code = 3


class NumericalError(J3SError):
    exit_code = 4


class InvalidConfig(ConfigError, ValueError):
    pass


class InvalidInput(DataError, ValueError):
    pass


class InvalidValue(DataError, ValueError):
    pass


class FormatError(DataError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NegativeFeature(DataError, ValueError):
    pass


class TooFewColumns(DataError, ValueError):
    pass


class PatchTooLarge(DataError, ValueError):
    pass


class DimensionMismatch(DataError, ValueError):
    pass


class EmptyClass(DataError, ValueError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class NumericalDivergence(NumericalError):
    pass
