"""Exception and warning types shared across the package."""


class CavcoolError(Exception):
    """Base class for all package-specific errors."""


class DegreeOverflow(CavcoolError):
    """An operator monomial exceeded the configured maximum exponent."""


class ResidualError(CavcoolError):
    """Strict derivation found couplings to moments outside the closed set."""


class SingularSystem(CavcoolError):
    """A linear system has no unique solution (e.g. no damping at eta = 0)."""


class StepUnderflow(CavcoolError):
    """Adaptive step-size control stalled or the integrator failed."""


class DimensionOverflow(CavcoolError):
    """Requested truncated Hilbert space exceeds the configured size limit."""


class CutoffTooSmall(CavcoolError):
    """Initial state cannot be represented safely below the Fock cutoffs."""


class CutoffSaturation(CavcoolError):
    """Population reached the Fock cutoffs; the oracle run is invalid."""


class NonPositiveRate(CavcoolError):
    """Cooling rate is not positive; steady phonon number is undefined."""


class ConfigError(CavcoolError):
    """Invalid run configuration (bad key, value, or combination)."""


class RegimeWarning(UserWarning):
    """Parameters are outside the validity regime of a model or formula."""
