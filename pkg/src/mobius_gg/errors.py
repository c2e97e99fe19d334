"""Exception types shared by the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigurationError(ValueError):
    """Parameters violate a construction's preconditions."""


class DerivationError(RuntimeError):
    """A relation oracle failed while deriving the generator table."""

    def __init__(self, relation: str, detail: str = ""):
        self.relation = relation
        msg = f"relation failed: {relation}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TracingError(RuntimeError):
    """A trajectory could not be compiled into a braid word."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)
