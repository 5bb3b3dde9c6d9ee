"""Exception hierarchy."""


class KobdynError(Exception):
    """Base class for all package errors."""


class DomainError(KobdynError, ValueError):
    """A point lies outside the domain where it is required to be interior."""


class UnsupportedOperation(KobdynError):
    """The operation has no implementation for this domain kind."""


class EstimationError(KobdynError):
    """A limit estimate did not settle; ``partial`` carries the samples."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class SelfMapViolation(KobdynError):
    """A map sent a point of the domain outside the domain."""


class NoPreimageError(KobdynError):
    """No in-domain preimage was found within the search budget."""


class BoundedStepError(KobdynError):
    """No admissible preimage respects the step bound.

    ``orbit`` holds the orbit computed up to the failure, when available.
    """

    def __init__(self, msg, orbit=None):
        super().__init__(msg)
        self.orbit = orbit


class ClassificationError(KobdynError):
    """The dynamical type could not be decided within budget."""


class ContradictionError(KobdynError):
    """A sampled quantity contradicts the map's assumed type."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class IsolationViolation(KobdynError):
    """Backward-orbit construction accumulated on the boundary away from the target."""

    def __init__(self, msg, cluster=None):
        super().__init__(msg)
        self.cluster = cluster


class ConfigError(KobdynError):
    """Configuration does not match the schema; ``field`` names the culprit."""

    def __init__(self, msg, field=None):
        super().__init__(msg)
        self.field = field
