"""Exception types raised by the simulator."""


class DomainError(ValueError):
    """Input outside the domain of a formula (bad rate, unrealizable geometry)."""


class SingularityError(DomainError):
    """Evaluation at a point where the quantity diverges."""


class DegeneracyError(ArithmeticError):
    """Linear system is singular or too ill-conditioned to solve reliably."""


class StiffnessError(RuntimeError):
    """Adaptive integrator could not make progress."""


class EstimationError(ValueError):
    """Signal does not support the requested estimate."""


class ConsistencyError(RuntimeError):
    """Internal cross-check between two constructions failed."""


class ValidationError(ValueError):
    """A state object violates its physical invariants."""
