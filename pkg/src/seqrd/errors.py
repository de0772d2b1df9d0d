"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: wrong lengths, out-of-range parameters, malformed policies."""


class SolverError(RuntimeError):
    """A numerical routine failed to bracket or converge."""


class BudgetError(ValueError):
    """Requested computation exceeds a hard size cap."""
