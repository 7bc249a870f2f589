"""Exception hierarchy shared by all chebmap modules."""


class ChebmapError(Exception):
    """Base class for every error raised by this package."""


class PoleError(ChebmapError, ValueError):
    """A latitude is too close to a pole for Mercator coordinates."""


class NoIntersection(ChebmapError):
    pass


class DegenerateCenters(ChebmapError):
    pass


class BadParam(ChebmapError, ValueError):
    pass


class SingularPoint(ChebmapError):
    pass


class InsufficientSamples(ChebmapError, ValueError):
    pass


class NotConformal(ChebmapError):
    pass


class StepUnderflow(ChebmapError, ValueError):
    pass


class RegionTooThin(ChebmapError):
    pass


class NotSimple(ChebmapError):
    pass


class NoConvergence(ChebmapError):
    """Iterative solve hit its sweep cap.

    The achieved residual, the requested tolerance and the cap are kept as
    attributes so callers can report them.
    """

    def __init__(self, residual, tol, max_iter):
        self.residual = residual
        self.tol = tol
        self.max_iter = max_iter
        super().__init__(
            f"no convergence after {max_iter} sweeps: residual={residual:.3e} tol={tol:.3e}"
        )


class NotHarmonic(ChebmapError):
    pass


class PathInconsistency(ChebmapError):
    pass


class BadSeedAngle(ChebmapError, ValueError):
    pass


class StepTooLarge(ChebmapError, ValueError):
    pass


class MissingNeighbor(ChebmapError):
    pass


class NetTooSmall(ChebmapError):
    pass
