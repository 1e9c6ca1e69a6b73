"""Exception types shared across the package."""


class MmgouError(Exception):
    """Base class for all package errors."""


class SpecError(MmgouError, ValueError):
    """A model specification violates its declared invariants."""


class StructuralError(MmgouError):
    """Structural defect of a chain or matrix (reducibility, absorbing state)."""


class ContractViolationError(MmgouError):
    """A precondition relating two inputs fails (e.g. a law that is not stationary)."""


class MomentExplosionError(MmgouError):
    """A moment transform was evaluated outside its finiteness domain."""

    def __init__(self, message, offender=None):
        super().__init__(message)
        self.offender = offender


class NumericalError(MmgouError):
    """Numerical failure: overflow, non-convergent quadrature, divergent series."""


class InapplicableError(MmgouError):
    """The requested statistic does not apply to this model (e.g. sign-switch
    analysis on a model whose multipliers are almost surely nonnegative)."""


class ConfigError(MmgouError, ValueError):
    """Configuration document invalid; carries the full list of findings."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "\n".join(f"  {path}: {msg}" for path, msg in self.errors)
        super().__init__(f"invalid configuration:\n{lines}")
