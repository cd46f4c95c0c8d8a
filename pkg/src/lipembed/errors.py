"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class LipembedError(Exception):
    exit_code = 1


class PreconditionError(LipembedError, ValueError):
    exit_code = 2


class NonInjectiveError(PreconditionError):
    """Two sample points collapse under a map."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class EmptySecantError(PreconditionError):
    pass


class SearchFailure(LipembedError):
    """A randomized search ran out of budget; ``best`` holds the best candidate."""

    exit_code = 3

    def __init__(self, message, best=None, stage=None):
        super().__init__(message)
        self.best = best
        self.stage = stage


class NotEquivalentError(LipembedError):
    exit_code = 4


class NumericalDriftError(LipembedError):
    """A construction step lost more accuracy than its tolerance allows."""

    exit_code = 3
