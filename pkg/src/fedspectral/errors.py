"""Exception types shared across the package."""


class ParseError(ValueError):
    """Malformed edge-list input; the message carries the offending line number."""


class ConfigError(ValueError):
    """Invalid experiment, partition, or protocol configuration."""


class ContractError(ValueError):
    """A caller violated an operation precondition (shape, symmetry, length)."""


class RankError(ArithmeticError):
    """Rank-deficient matrix where full column rank is required."""


class ConvergenceError(RuntimeError):
    """An iterative kernel failed to converge within its iteration cap."""
