"""Exception hierarchy shared across the package."""


class PeakctlError(Exception):
    """Base class for all package errors."""


class DomainError(PeakctlError):
    """State left the model's declared domain (beyond the tolerance band)."""


class StiffnessError(PeakctlError):
    """Integrator step size underflowed before reaching the horizon."""


class NoBracket(PeakctlError):
    """No sign change of f2 found over the scanned abscissa range."""


class NotInDPlus(PeakctlError):
    """Operation requires an initial condition with f2 > 0."""


class OutOfRange(PeakctlError):
    """Requested level lies outside the stored arc's y range."""


class QuadratureFailure(PeakctlError):
    """Adaptive quadrature exhausted its subdivision budget."""


class SingularDelta(PeakctlError):
    """Delta = f2*g1 - f1*g2 vanishes where it must not."""


class G2Zero(PeakctlError):
    """g2 = 0 on the singular arc; the arc control is undefined."""


class DegenerateGradient(PeakctlError):
    """grad(f2).g is (numerically) zero; the ridge control is undefined."""


class EmptyRegion(PeakctlError):
    """No grid point of the requested box lies in the region to check."""


class ConfigError(PeakctlError):
    """Malformed run configuration."""
