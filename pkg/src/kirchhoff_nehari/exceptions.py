class KirchhoffError(Exception):
    """Base class for errors raised by this package."""


class RootFindingError(KirchhoffError):
    """A scalar root could not be bracketed or did not converge."""


class NehariEmptyError(KirchhoffError):
    """The fiber along the requested direction has no local maximum."""


class ConvergenceError(KirchhoffError):
    """An iterative solver stopped before reaching its tolerance.

    The best value found so far is kept on ``best`` so callers can still
    report it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MeshMismatchError(KirchhoffError, ValueError):
    """Arguments live on different meshes or in different dimensions."""
