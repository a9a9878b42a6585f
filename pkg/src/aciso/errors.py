"""Exception types shared across the package."""


class AcisoError(Exception):
    """Base class for all package errors."""


class NonAdmissible(AcisoError):
    """A candidate double-well potential violates the admissibility conditions."""


class QuadratureFailure(AcisoError):
    """An adaptive quadrature did not converge to the requested tolerance."""


class ProfileMismatch(AcisoError):
    """Quadrature-inversion and ODE routes for the transition profile disagree."""


class BracketFailure(AcisoError):
    """A monotone root-find could not establish a sign-changing bracket."""


class GridMismatch(AcisoError):
    """Two radial fields that must share a grid do not."""


class RegimeViolation(AcisoError):
    """The transition length is too large (or too small) for the requested grid."""


class NoConvergence(AcisoError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoDecayingSolution(AcisoError):
    """Shooting could not bracket a decaying solution of the radial ODE."""


class HypothesisViolation(AcisoError):
    """A perturbation lies outside the smallness hypotheses of the quadratic estimate."""


class NoBeta(AcisoError):
    """The primitive of the shooting nonlinearity never becomes positive below 1."""


class ConfigError(AcisoError):
    """An experiment configuration failed to parse or validate."""
