#################################################################################
# Exception hierarchy shared by every module.
# Each family carries the exit code main.py returns for it:
#   2 invalid input/config/params, 3 numerical failure, 4 I/O.
#################################################################################


class GmmBenchError(Exception):
    """Base class for all library errors."""
    exit_code = 1


class InvalidInput(GmmBenchError, ValueError):
    exit_code = 2


class InvalidParams(InvalidInput):
    pass


class InvalidConfig(InvalidInput):
    pass


class LengthMismatch(InvalidInput):
    pass


class TooFewPoints(InvalidInput):
    pass


class NotSymmetric(InvalidInput):
    pass


class NumericalError(GmmBenchError, ArithmeticError):
    exit_code = 3


class NotPositiveDefinite(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class DegenerateCovariance(NumericalError):
    pass


class EmptyRegion(NumericalError):
    """The region {g <= 0} is empty, so its minimum norm is +infinity."""


class StorageError(GmmBenchError, OSError):
    exit_code = 4

    def __init__(self, path, message: str):
        self.path = str(path)
        self.message = message
        super().__init__(f"{self.path}: {message}")

    def __reduce__(self):
        return type(self), (self.path, self.message)


class ReplicationError(GmmBenchError):
    """A failure inside one replication; keeps the index and the original error."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"replication {index} failed: {cause}")

    def __reduce__(self):
        return type(self), (self.index, self.cause)
