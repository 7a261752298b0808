"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DimensionMismatchError(ValueError):
    pass


class ContractError(ValueError):
    """A precondition of an operator representation was violated."""


class ResourceError(RuntimeError):
    """A computation would exceed a configured size cap."""


class ConfigError(ValueError):
    pass
