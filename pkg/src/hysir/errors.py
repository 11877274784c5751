class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(ValueError):
    """A state or configuration violates its invariants."""


class NoEquilibriumError(ValueError):
    """No endemic equilibrium exists for the requested data."""


class IntegratorFault(RuntimeError):
    """The integrator left the invariant domain; indicates a bug."""
