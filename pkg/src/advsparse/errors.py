"""Exception types shared across the package."""


class RobustPointError(Exception):
    """The unconstrained attack found no adversarial perturbation at a point."""


class AttackError(RuntimeError):
    """Attack aborted, e.g. on non-finite gradients."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss."""


class ModelFormatError(ValueError):
    """Model file is malformed, truncated, or has an unsupported version."""


class NumericError(RuntimeError):
    """A numeric routine failed to reach its target tolerance."""


class ConsistencyError(RuntimeError):
    """Computed values violate an invariant that should hold by construction."""


class UsageError(Exception):
    """Invalid command-line arguments or configuration."""
