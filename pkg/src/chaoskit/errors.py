"""Exception types shared across chaoskit."""


class ChaosKitError(Exception):
    """Base class for all chaoskit errors."""


class ConfigError(ChaosKitError, ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(ChaosKitError, ValueError):
    """A point does not belong to the system's state space."""


class HorizonExceeded(ChaosKitError):
    """An operation asked for iterates beyond the system's horizon cap."""


class InsufficientData(ChaosKitError):
    """Too few samples to produce an estimate."""


class UnsupportedSystem(ChaosKitError):
    """The requested estimator does not apply to this system."""
