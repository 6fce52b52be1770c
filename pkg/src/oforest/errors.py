"""Exception types shared across the package."""


class OForestError(Exception):
    """Base class for all package errors."""


# --- numeric kernels ---------------------------------------------------------

class NonUnitDirection(OForestError):
    """Direction vector is not unit-norm within tolerance."""


class RankDeficient(OForestError):
    """Matrix is numerically rank deficient."""


class TooFewSamples(OForestError):
    """Operation needs more sample rows than were given."""


class DegenerateData(OForestError):
    """Data block carries no usable signal (numerically zero matrix)."""


# --- trees / forest ----------------------------------------------------------

class EmptyData(OForestError):
    """No samples to fit on."""


class ConfigInvalid(OForestError):
    """Ensemble configuration violates its invariants."""


class DimensionMismatch(OForestError):
    """Sample dimension does not match the fitted feature count."""


class UnknownLeaf(OForestError):
    """Leaf id out of range for the tree."""


# --- LP decode ---------------------------------------------------------------

class InfeasibleCode(OForestError):
    """Constraint system has no solution: corrupted code/model pair or
    numerical breakdown."""


class IterationLimit(OForestError):
    """Simplex iteration cap reached without an optimal vertex."""


# --- metrics -----------------------------------------------------------------

class LengthMismatch(OForestError):
    """Vectors have different lengths."""


class ShapeMismatch(OForestError):
    """Images have different shapes."""


# --- data I/O ----------------------------------------------------------------

class ParseError(OForestError):
    """Malformed numeric value; message carries row/column location."""


class RaggedRows(OForestError):
    """CSV rows have inconsistent widths; message names the offending line."""


class UnsupportedFormat(OForestError):
    """Image file is not binary P5/P6 with maxval 255."""


class CorruptHeader(OForestError):
    """Image header or raster is truncated/inconsistent."""


class NotAnImage(OForestError):
    """Dataset has no image shape attached."""


class SizesExceedData(OForestError):
    """Requested split sizes exceed the available samples."""


class VersionMismatch(OForestError):
    """Model file format version is not supported."""


class SchemaError(OForestError):
    """Model file violates the documented schema."""


class ChannelMismatch(OForestError):
    """Image channel count does not match the per-channel model list."""
