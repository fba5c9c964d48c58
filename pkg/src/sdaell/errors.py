"""Exception hierarchy shared by all sdaell modules."""


class SdaeError(Exception):
    """Base class. ``context`` collects where the failure happened
    (step index, sample, level) as the error propagates outward."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = dict(context)

    def add_context(self, **context):
        for key, value in context.items():
            self.context.setdefault(key, value)
        return self

    def __str__(self):
        msg = super().__str__()
        if self.context:
            where = ", ".join(f"{k}={v}" for k, v in self.context.items())
            msg = f"{msg} [{where}]"
        return msg


class NonFiniteInput(SdaeError, ValueError):
    pass


class NonFiniteDerivative(SdaeError, ArithmeticError):
    pass


class NonFiniteState(SdaeError, ArithmeticError):
    pass


class EmptySampleSet(SdaeError, ValueError):
    pass


class InvalidResolution(SdaeError, ValueError):
    pass


class NearSingularOperator(SdaeError, ArithmeticError):
    pass


class SingularMatrix(SdaeError, ArithmeticError):
    pass


class AssumptionViolated(SdaeError):
    pass


class GridMismatch(SdaeError, ValueError):
    pass


class DegenerateRegression(SdaeError, ValueError):
    pass


class UnknownProblem(SdaeError, KeyError):
    def __str__(self):
        return SdaeError.__str__(self)
