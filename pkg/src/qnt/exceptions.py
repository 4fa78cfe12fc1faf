"""Exception hierarchy shared across the toolkit."""


class QNTError(Exception):
    """Base class for all toolkit errors."""


class InvalidCandidate(QNTError, ValueError):
    """A flip-channel value has no valid depolarizing counterpart."""


class DimensionTooLarge(QNTError, ValueError):
    pass


class DimensionMismatch(QNTError, ValueError):
    pass


class EmptyDatabase(QNTError, ValueError):
    pass


class MixedCircuits(QNTError, ValueError):
    pass


class EstimationError(QNTError):
    """Raised when moments cannot be turned into link estimates."""


class DegenerateMoments(EstimationError):
    pass


class NegativeSquare(EstimationError):
    pass


class NoValidCandidate(EstimationError):
    pass


class NoRootInRange(EstimationError):
    pass


class SingularDistribution(QNTError):
    """An outcome has vanishing probability but nonzero gradient."""


class SingularFIM(QNTError):
    pass
