"""Exception types shared across the toolkit."""


class WtstabError(Exception):
    """Base class for toolkit errors."""


class DimensionMismatch(WtstabError, ValueError):
    """State vector does not match the system's component count."""


class NoConvergence(WtstabError):
    """Newton iteration stalled before reaching the requested tolerance."""


class SingularJacobian(WtstabError):
    """Newton system is singular, typically a degenerate phase condition."""


class NoWaveTrain(WtstabError):
    """No nontrivial periodic profile exists for the requested wavenumber."""


class DegenerateZeroMode(WtstabError):
    """The zero eigenvalue of the periodic linearization is not simple."""


class BranchTrackingFailure(WtstabError):
    """Nearest-eigenvalue continuation lost the tracked branch."""


class TruncationInsufficient(WtstabError):
    """Transverse wavenumber truncation does not contain the spectrum."""


class DomainError(WtstabError, ValueError):
    """Parameters outside the validity domain of an integral identity."""


class Instability(WtstabError):
    """Time integration blew up (sup-norm growth beyond the guard)."""


class IncompatibleGrid(WtstabError, ValueError):
    """Field grid is incompatible with the wave train or stepper."""


class KernelMismatch(WtstabError):
    """Kernel parameters were computed from a different wave train."""


class NoDomination(WtstabError):
    """No Gaussian template of the requested shape dominates the data."""


class NotUnitVector(WtstabError, ValueError):
    """Line-orientation vector is not normalized."""


class WeightViolation(WtstabError):
    """Custom perturbation fails its declared localization bound."""


class DenominatorTooSmall(WtstabError):
    """1 + psi_zeta too close to zero for the modulated nonlinearity."""


class FitDiverged(WtstabError):
    """Pointwise phase fit left the small-shift branch."""


class MissingSeries(WtstabError, KeyError):
    """A weighted-norm series required by the template norm is absent."""


class InsufficientData(WtstabError):
    """Too few points inside the fit window."""


class NonPositiveValues(WtstabError, ValueError):
    """Log-log fit requested on non-positive data."""


class ConfigInvalid(WtstabError, ValueError):
    """Configuration file fails schema validation."""
