"""Exception hierarchy shared by every module."""


class DhifError(Exception):
    pass


class InvalidInputError(DhifError, ValueError):
    """Malformed arguments: wrong shapes, weights off the simplex, bad config."""


class PreconditionError(DhifError):
    """A mathematical precondition failed (singular F, non-observing sensor, ...)."""


class NotIdentifiableError(DhifError):
    """The summed information of a fusion problem is singular."""


class InfiniteUncertaintyError(DhifError):
    """An information matrix is singular, so no finite covariance exists."""


class FilterFault(DhifError):
    """A filter produced non-finite numbers; carries (trial, step, agent) context."""

    def __init__(self, message, trial=None, step=None, agent=None, algorithm=None):
        super().__init__(message)
        self.trial = trial
        self.step = step
        self.agent = agent
        self.algorithm = algorithm
