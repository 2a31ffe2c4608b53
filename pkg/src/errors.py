"""Exception hierarchy shared by all eup-spectra modules."""

from typing import Optional


class EupSpectraError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidParameter(EupSpectraError, ValueError):
    """A value violates a type invariant (e.g. alpha <= 0, n < 1)."""


class SingularMomentum(EupSpectraError):
    """1 + mu(x) (nearly) vanishes on the sampling contour."""


class ContourNotReflectionInvariant(EupSpectraError):
    """PT reflection does not map the contour onto itself."""


class NonRealCoefficients(EupSpectraError):
    """Sturm-Liouville coefficients are not real on the chosen contour."""


class NoConvergence(EupSpectraError):
    """An eigenvalue failed to deflate within the allowed sweeps."""


class AccuracyNotReached(EupSpectraError):
    """Two-grid estimate exceeds the requested accuracy (strict mode only)."""


class PairingViolation(EupSpectraError):
    """A complex eigenvalue has no conjugate partner."""


class BranchCutProximity(EupSpectraError):
    """An argument lies on or too close to a branch cut."""


class NoQuadratureConvergence(EupSpectraError):
    """Panel doubling did not reach the requested tolerance."""


class ConfigError(EupSpectraError):
    """Invalid run configuration; carries the offending field."""

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class NotPTSymmetricError(ConfigError):
    """mu or V in the configuration breaks PT symmetry."""
