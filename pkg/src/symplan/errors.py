"""Exceptions shared across the package."""


class InvariantViolation(ValueError):
    """A world state failed one of its structural invariants."""


class PreconditionError(ValueError):
    """An action was applied in a state where its precondition does not hold.

    Carries the violated predicate as a human-readable string so callers
    (executor recovery, the perturbation endpoint) can surface it.
    """

    def __init__(self, symbol: str, predicate: str):
        self.symbol = symbol
        self.predicate = predicate
        super().__init__(f"action {symbol!r} rejected: {predicate}")
