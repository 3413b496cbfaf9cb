"""Exception hierarchy shared by all modules."""


class MREError(Exception):
    """Base class for errors raised by this package."""

    exit_code = 1


class GraphValidationError(MREError, ValueError):
    """The graph description violates one or more structural invariants."""

    exit_code = 1

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SingularEvaluationError(MREError, ValueError):
    """A kernel or term was evaluated on its singular set."""

    exit_code = 2


class UnsupportedOperationError(MREError, ValueError):
    """Convolution or differentiation leaves the closed term family."""

    exit_code = 2


class FormulationError(MREError, ValueError):
    """The chosen density formulation cannot be iterated on this graph."""

    exit_code = 1


class QuadratureBudgetError(MREError, RuntimeError):
    """Adaptive quadrature exhausted its evaluation budget."""

    exit_code = 3

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NearResonanceError(MREError, RuntimeError):
    """The discretized operator has an eigenvalue within tolerance of 1."""

    exit_code = 3

    def __init__(self, message, condition=None, eigenvalue=None):
        super().__init__(message)
        self.condition = condition
        self.eigenvalue = eigenvalue
