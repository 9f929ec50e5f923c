"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericError(ArithmeticError):
    """An iterative numerical routine failed to converge or lost precision."""


class GuardError(ValueError):
    """A size guard for an exponential-cost routine was tripped."""


class SubsetBudgetError(GuardError):
    """A reformulation would need more product variables than allowed."""

    def __init__(self, needed, budget):
        super().__init__(
            f"reformulation needs {needed} product variables, budget is {budget}; "
            "use the outer-approximation method (oa1/oa2) or raise --subset-budget"
        )
        self.needed = needed
        self.budget = budget


class InstanceParseError(ValueError):
    """An instance or solution file is malformed or violates an invariant."""


class InfeasibleError(Exception):
    """The chance-constrained problem (or a relaxation of it) has no solution.

    ``certificate`` is a dict describing the reason, e.g. the offending row
    and the largest cover probability it can reach.
    """

    def __init__(self, message, certificate=None, trace=None):
        super().__init__(message)
        self.certificate = certificate or {}
        self.trace = trace


class SolveTimeout(Exception):
    """A time or node limit stopped a solve before optimality was proven."""

    def __init__(self, message, trace=None, incumbent=None):
        super().__init__(message)
        self.trace = trace
        self.incumbent = incumbent
