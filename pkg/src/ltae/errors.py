"""Exception hierarchy shared by every module.

The CLI maps each family onto an exit code, so new errors should subclass
one of :class:`DataError` or :class:`NumericError` rather than ``LtaeError``
directly.
"""


class LtaeError(Exception):
    """Base class for all package errors."""


class DataError(LtaeError, ValueError):
    """Input data is malformed, missing, or of the wrong shape."""


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInputError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class ShapeError(DataError):
    pass


class MissingReferenceChannelError(DataError):
    pass


class ParameterError(DataError):
    pass


class ContractError(DataError):
    """An input violates a precondition that cannot be detected from shape alone."""


class CheckpointError(DataError):
    pass


class IncompatibleCheckpointError(CheckpointError):
    pass


class IntegrityError(CheckpointError):
    pass


class NumericError(LtaeError, ArithmeticError):
    """Non-finite values or an ill-conditioned numerical problem."""


class RankError(NumericError):
    pass


class DegenerateVectorError(NumericError):
    pass


class DegenerateLatentError(NumericError):
    pass


class DegenerateDistributionError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
