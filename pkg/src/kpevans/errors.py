"""Exception types shared across the package."""


class KPEvansError(Exception):
    """Base class for all numerical/domain errors raised by kpevans."""


class NoPeriodicOrbit(KPEvansError):
    """No pair of adjacent simple turning points brackets a potential well."""


class AmbiguousWell(NoPeriodicOrbit):
    """Several disjoint wells admit an orbit; a bracket hint is required."""


class DegenerateTurningPoint(KPEvansError):
    """A turning point is (numerically) a multiple root of E - V."""


class QuadratureNotConverged(KPEvansError):
    """Node doubling exhausted without meeting the relative tolerance."""


class IntegrationFailure(KPEvansError):
    """The adaptive ODE integrator could not complete the requested span."""


class PeriodicityViolation(KPEvansError):
    """Integrated profile fails to close up after one period."""


class ModulusOutOfRange(KPEvansError):
    """Elliptic modulus outside [0, 1)."""


class WronskianDegenerate(KPEvansError):
    """Wronskian normalization of (u_x, u_E) lost; exceptional parameters."""


class StencilLeftRegion(KPEvansError):
    """A finite-difference stencil point has no periodic orbit."""


class NotKdV(KPEvansError):
    """Operation requires the KdV nonlinearity f(u) = u^2/2."""


class ScaleOverflow(KPEvansError):
    """Monodromy log-scale bookkeeping can no longer be reconstructed."""


class NonRealEvans(KPEvansError):
    """Evans value acquired a spurious imaginary part on real data."""


class HighFreqInconclusive(KPEvansError):
    """Sign of the Evans function still oscillating at the largest probe."""


class StructureViolation(KPEvansError):
    """A block of the reduced system exceeds its advertised order."""


class FitIllConditioned(KPEvansError):
    """Least-squares fit of the low-frequency model is ill conditioned."""


class NoContraction(KPEvansError):
    """Conjugator fixed-point iteration diverges (delta/eta too large)."""


class PeriodMapSingular(KPEvansError):
    """I - P singular for the homogeneous Sylvester flow; gap failure."""


class ResidualExceeded(KPEvansError):
    """A conjugation residual certificate is above tolerance."""


class ConfigError(KPEvansError):
    """Invalid problem configuration (CLI input)."""
