"""Exception hierarchy.

Every error carries the process exit code the command line maps it to:
2 for an invalid kernel, 3 when an enumeration cap is exceeded and 4 for
numerical failures.
"""


class NSDPPError(Exception):
    exit_code = 4


class InvalidKernelError(NSDPPError):
    exit_code = 2


class NumericFailure(NSDPPError):
    exit_code = 4


class CapExceeded(NSDPPError):
    exit_code = 3


class DomainError(InvalidKernelError, ValueError):
    pass


class DimMismatch(NSDPPError, ValueError):
    exit_code = 2


class IndexOutOfRange(NSDPPError, IndexError):
    exit_code = 2


class ZeroVector(DomainError):
    pass


class NormalizationError(DomainError):
    pass


class NotSymmetric(InvalidKernelError):
    pass


class InvalidDouble(InvalidKernelError):
    pass


class BoundViolated(InvalidKernelError):
    def __init__(self, index, value):
        super().__init__(
            f"eigenvalue bound violated at index {index}: {value!r} > 1/4"
        )
        self.index = index
        self.value = value


class OutOfRegion(InvalidKernelError):
    pass


class NonProbabilityOutput(InvalidKernelError):
    pass


class NegativeMass(InvalidKernelError):
    pass


class SingularConversion(NumericFailure):
    pass


class SingularPivot(NumericFailure):
    pass


class PivotBreakdown(NumericFailure):
    pass


class ProbabilityRange(NumericFailure):
    pass


class ConvergenceFailure(NumericFailure):
    pass
