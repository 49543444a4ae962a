"""Exception hierarchy shared by all modules.

The CLI maps ConfigError to exit code 2 and every other CouplerLabError to 3.
"""


class CouplerLabError(Exception):
    """Base class for library errors."""


class ConfigError(CouplerLabError):
    """Malformed or inconsistent configuration input."""


class ContractError(CouplerLabError):
    """A precondition of an operation is violated."""


class SingularParameterError(ContractError):
    """A closed-form denominator vanishes for the given parameters."""


class AmbiguousLabelError(ContractError):
    """A dressed state cannot be assigned a bare label above the overlap floor."""


class NoBracketError(ContractError):
    """Root finding has no sign change in the search interval."""


class InvariantError(CouplerLabError):
    """A numerical invariant (Hermiticity, trace, positivity) was broken."""


class EigenSolverError(CouplerLabError):
    """Eigendecomposition failed its residual or orthonormality contract."""


class RegimeWarning(UserWarning):
    """A closed-form result is evaluated outside its regime of validity."""
