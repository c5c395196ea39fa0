"""Exception hierarchy for the qpikit pipeline.

Every stage raises a named subclass of :class:`QpiError` so callers (and the
CLI) can report which contract was violated without parsing messages.
"""


class QpiError(Exception):
    """Base class for all qpikit errors."""


class IoError(QpiError):
    """A file could not be written or read at the OS level."""


class InvalidField(QpiError):
    """A field grid violates its invariants (non-finite or negative values)."""


class FormatError(QpiError):
    """A QPIF file is malformed (bad magic, truncated payload, bad header)."""


class VersionError(QpiError):
    """A QPIF file declares an unsupported format version."""


class CropError(QpiError):
    """Requested crop size exceeds the field dimensions."""


class PairError(QpiError):
    """An input/ground-truth pair has mismatched dimensions."""


class InvalidCarrier(QpiError):
    """Carrier frequency is zero or at/beyond Nyquist."""


class SidebandOverlap(QpiError):
    """Sideband filter radius reaches the DC term."""


class DomainError(QpiError):
    """Zernike evaluation requested outside the unit disc."""


class BadBackground(QpiError):
    """Background amplitude below the division floor at some pixel."""


class UnderdeterminedFit(QpiError):
    """Fewer masked pixels than Zernike modes to fit."""


class ScatteringBound(QpiError):
    """Refractive-index contrast exceeds the weak-scattering limit."""


class InvalidAngle(QpiError):
    """Illumination direction is evanescent in the medium."""


class AngleCountMismatch(QpiError):
    """Field count differs from the configured angle count."""


class NeedsUnwrap(QpiError):
    """A field passed to reconstruction still carries wrapped phase."""


class ShapeError(QpiError):
    """Two grids that must share a shape do not."""


class DegenerateField(QpiError):
    """Both fields of a correlation are identically zero."""


class EmptyMask(QpiError):
    """A background mask selects no pixels."""


class EmptyInput(QpiError):
    """An aggregate was requested over an empty collection."""


class SceneRejected(QpiError):
    """A generated scene failed quality control and must be resampled."""
