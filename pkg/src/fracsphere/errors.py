"""Error taxonomy shared by all modules.

DomainError   -- an argument lies outside a function's mathematical domain,
                 or a configuration value violates a precondition.
AccuracyError -- a numerical routine could not reach its accuracy target
                 (raised instead of returning a silently wrong value).
I/O problems use the builtin OSError hierarchy.
"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class AccuracyError(ArithmeticError):
    """A numerical method failed to converge to its stated tolerance."""
