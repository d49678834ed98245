"""Exception taxonomy shared across the package."""


class SpectralShiftError(Exception):
    """Base class for all package errors."""


class ValidationError(SpectralShiftError):
    """Input data violates a structural invariant."""


class ConstraintError(ValidationError):
    """Subspace constraint indices are invalid."""


class EmptySubspaceError(ValidationError):
    """All degrees of freedom are constrained away."""


class ShapeError(ValidationError):
    """Operands live on incompatible discrete spaces."""


class SolverError(SpectralShiftError):
    """A linear or eigenvalue solve failed; carries residual info when available."""


class DegeneracyError(SpectralShiftError):
    """The tracked eigenvalue is not simple enough to proceed."""


class MassDefectError(SpectralShiftError):
    """The base eigenfunction has lost too much mass in the perturbed space."""


class TrackingError(SpectralShiftError):
    """No perturbed eigenpair has sufficient overlap with the base one."""


class UndefinedRatioError(SpectralShiftError):
    """Zero-energy corrector: the smallness ratio is undefined."""


class KindError(SpectralShiftError):
    """Operation applied to a model kind it does not support."""


class SweepError(SpectralShiftError):
    """Too many sweep rows failed eigenvalue tracking."""


class InsufficientDataError(SpectralShiftError):
    """Not enough usable points for a rate fit."""


class ConfigError(SpectralShiftError):
    """Configuration text could not be parsed; message names key and line."""
