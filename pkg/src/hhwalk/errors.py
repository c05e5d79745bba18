"""Exception hierarchy shared by all hhwalk modules."""


class HHWalkError(Exception):
    """Base class for library errors."""


class RetriesExhausted(HHWalkError, RuntimeError):
    """A rejection sampler hit its retry cap."""


class TemplateSizeMismatch(HHWalkError, ValueError):
    pass


class NotAutomorphic(HHWalkError, ValueError):
    pass


class InvalidHousehold(HHWalkError, ValueError):
    pass


class DeadEnd(HHWalkError, RuntimeError):
    """Every outgoing weight of a walk state is zero."""


class DeadEndState(DeadEnd):
    """Raised while building a transition matrix that has a zero row."""


class DegenerateParams(HHWalkError, ValueError):
    pass


class SingularSystem(HHWalkError, ArithmeticError):
    pass


class NotConverged(HHWalkError, RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


class ConfigError(HHWalkError, ValueError):
    pass
