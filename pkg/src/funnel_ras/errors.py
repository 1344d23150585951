"""Exception hierarchy for funnel_ras."""


class FunnelRASError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(FunnelRASError, ValueError):
    """Index out of range or vector of the wrong length."""


class ConstructionError(FunnelRASError, ValueError):
    """A set, environment or funnel could not be built from the given data."""


class ParameterError(FunnelRASError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class ModelError(FunnelRASError):
    """Plant evaluation produced a non-finite value."""


class AssumptionViolationError(FunnelRASError):
    """g(x) g(x)^T is not (numerically) positive definite."""


class FunnelViolationError(FunnelRASError):
    """The state left the funnel, so the barrier transform is undefined."""

    def __init__(self, message, dims=None, t=None):
        super().__init__(message)
        self.dims = list(dims) if dims is not None else []
        self.t = t


class FunnelCollapseError(FunnelRASError):
    """Upper funnel bound fell to or below the lower bound."""


class AdaptiveSingularityError(FunnelRASError):
    """psi + alpha reached the singularity guard of the adaptive law."""


class IntegrationError(FunnelRASError):
    """A Runge-Kutta stage produced a non-finite value."""


class GeometricInfeasibilityError(FunnelRASError):
    """No circumvent function can push the funnel past an obstacle."""


class InfeasibleDimensionError(GeometricInfeasibilityError):
    """The obstacle spans the whole state-space projection of the chosen dimension."""


class SynthesisError(FunnelRASError):
    """The synthesis loop stopped without a clean trajectory."""

    def __init__(self, message, choice_log=None, trajectory=None, report=None):
        super().__init__(message)
        self.choice_log = list(choice_log or [])
        self.trajectory = trajectory
        self.report = report


class ReplayError(FunnelRASError):
    """A recorded choice log does not fit the environment it is replayed on."""


class SpecError(FunnelRASError, ValueError):
    """A run-spec file failed to parse or validate."""
