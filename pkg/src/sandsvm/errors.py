"""Exception types shared across the toolkit.

The CLI maps these onto exit codes (data problems -> 2, no suitable
kernel -> 3, solver failures -> 4); everything else is a bug and is
allowed to propagate.
"""


class SandsvmError(Exception):
    """Base class for all toolkit errors."""


class DataError(SandsvmError):
    """Unusable input data: I/O, parsing, non-finite values, bad labels."""


class ParseError(DataError):
    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class SplitError(DataError):
    """A requested train/test or fold split is infeasible."""


class DimensionMismatch(SandsvmError):
    """Operands disagree on feature dimensionality."""


class SolverError(SandsvmError):
    """SVM training failed outright (as opposed to converged=False)."""


class NoSuitableKernelError(SandsvmError):
    """Every kernel candidate scored at or below the -5 dB rejection line."""


class FitError(SandsvmError):
    """Curve fitting could not produce a usable parameter set."""
