"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and the ``module`` it
was raised from, so the CLI can emit a structured error object.
"""


class HeatflowError(Exception):
    code = "heatflow_error"
    module = "heatflow"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self):
        out = {"code": self.code, "module": self.module, "message": str(self)}
        if self.context:
            out["context"] = {k: _plain(v) for k, v in self.context.items()}
        return out


def _plain(v):
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return repr(v)


class DomainError(HeatflowError, ValueError):
    code = "domain_error"


class TruncationFailure(HeatflowError, ArithmeticError):
    code = "truncation_failure"


class ConvergenceFailure(HeatflowError, ArithmeticError):
    code = "convergence_failure"


class PrecisionLoss(HeatflowError, ArithmeticError):
    code = "precision_loss"


class PrecisionLossWarning(UserWarning):
    pass


# zeros
class ParseError(HeatflowError, ValueError):
    code = "parse_error"
    module = "zeros"


class OrderError(HeatflowError, ValueError):
    code = "order_error"
    module = "zeros"


class SuspectedMissedZero(HeatflowError, ArithmeticError):
    code = "suspected_missed_zero"
    module = "zeros"


class SuspectedComplexZero(HeatflowError, ArithmeticError):
    code = "suspected_complex_zero"
    module = "zeros"


class ContourThroughZero(HeatflowError, ArithmeticError):
    code = "contour_through_zero"
    module = "zeros"


class NonIntegerWinding(HeatflowError, ArithmeticError):
    code = "non_integer_winding"
    module = "zeros"


# dynamics / energy
class GapCollapse(HeatflowError, ArithmeticError):
    code = "gap_collapse"
    module = "dynamics"


class StepUnderflow(HeatflowError, ArithmeticError):
    code = "step_underflow"
    module = "dynamics"


class InsufficientSnapshots(HeatflowError, ValueError):
    code = "insufficient_snapshots"
    module = "dynamics"


class WindowTooSmall(HeatflowError, ValueError):
    code = "window_too_small"
    module = "energy"


class RangeError(HeatflowError, ValueError):
    code = "range_error"
    module = "stats"


class ConfigError(HeatflowError, ValueError):
    code = "config_error"
    module = "cli"


class ZeroProximity(HeatflowError, ZeroDivisionError):
    code = "zero_proximity"
    module = "ht"
