"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures to stable process exit statuses without a lookup table.
"""


class CalshiftError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1
    code = "error"

    def to_dict(self):
        return {"code": self.code, "message": str(self)}


class InputError(CalshiftError, ValueError):
    exit_code = 2
    code = "input_error"


class NumericalError(CalshiftError, ArithmeticError):
    exit_code = 3
    code = "numerical_error"


class ConvergenceError(CalshiftError):
    exit_code = 4
    code = "convergence_error"


class NonSimplexRow(InputError):
    code = "non_simplex_row"

    def __init__(self, row, detail=""):
        self.row = int(row)
        msg = f"row {self.row} is not a point on the probability simplex"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class EmptyLabels(InputError):
    code = "empty_labels"


class LabelOutOfRange(InputError):
    code = "label_out_of_range"


class TooFewSamples(InputError):
    code = "too_few_samples"


class OutOfRange(InputError):
    code = "out_of_range"


class SupportViolation(InputError):
    code = "support_violation"


class InsufficientSamples(InputError):
    code = "insufficient_samples"

    def __init__(self, cls, needed, available):
        self.cls = int(cls)
        self.needed = int(needed)
        self.available = int(available)
        super().__init__(
            f"class {self.cls} needs {self.needed} samples, only {self.available} available"
        )


class DegenerateInput(InputError):
    code = "degenerate_input"


class TooFewDraws(InputError):
    code = "too_few_draws"


class ParseError(InputError):
    code = "parse_error"

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)

    def to_dict(self):
        out = super().to_dict()
        if self.line is not None:
            out["line"] = self.line
        return out


class SchemaError(InputError):
    code = "schema_error"


class SingularConfusion(NumericalError):
    code = "singular_confusion"


class NumericalFailure(NumericalError):
    code = "numerical_failure"


class EmptyBin(NumericalError):
    code = "empty_bin"

    def __init__(self, bins, message=None):
        self.bins = [int(b) for b in bins]
        super().__init__(message or f"bins without construction points: {self.bins}")


class EmptyTargetBin(NumericalError):
    code = "empty_target_bin"

    def __init__(self, points):
        self.points = [int(j) for j in points]
        shown = self.points[:10]
        more = "" if len(self.points) <= 10 else f" (+{len(self.points) - 10} more)"
        super().__init__(f"target points with no other target point in their bin: {shown}{more}")


class NoConvergence(ConvergenceError):
    """Raised when an iterative estimator hits its iteration cap.

    The last iterate is attached as ``result`` so callers can decide whether
    to use it anyway.
    """

    code = "no_convergence"

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class ClassError(CalshiftError):
    """Wraps a per-class failure, tagging the class index."""

    def __init__(self, class_index, cause):
        self.class_index = int(class_index)
        self.cause = cause
        self.exit_code = cause.exit_code
        self.code = cause.code
        super().__init__(f"class {self.class_index}: {cause}")
