"""Exception types shared by the recovery library and the benchmark runner."""


class RecoveryLibError(Exception):
    """Root of every error raised on purpose by this package."""


class RejectedInputError(RecoveryLibError, ValueError):
    """Input violates an operation's precondition (shape, range, duplicates)."""


class SingularityError(RecoveryLibError, ArithmeticError):
    """A direct solve met a rank-deficient system."""


class ProxyInvariantError(RecoveryLibError, RuntimeError):
    """select_k was handed a proxy with no strictly positive magnitude."""


class SpecError(RejectedInputError):
    """Invalid experiment spec; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
