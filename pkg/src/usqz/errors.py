"""Exception types shared across the package."""


class UsqzError(Exception):
    """Base class for all package errors."""


# --- geometry / rasterization ---

class CrossingContours(UsqzError):
    """Inner contour radius exceeds outer contour radius on some scan line."""


# --- speckle statistics ---

class DegenerateSample(UsqzError):
    """Sample set too small or with zero variance for a moment fit."""


# --- segmentation ---

class MissingClass(UsqzError):
    """A tissue class is absent from every training label map."""


class TopologyFailure(UsqzError):
    """Label map lacks the nested ring topology needed for contour extraction."""


# --- codec ---

class UnencodableDelta(UsqzError):
    """Radius delta outside the 2-bit chain-code alphabet."""


class RangeViolation(UsqzError):
    """Decoded radius leaves the valid sample range."""


class BadMagic(UsqzError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(UsqzError):
    """File declares a format version this reader does not understand."""


class TruncatedFile(UsqzError):
    """File ends before the declared payload is complete."""


# --- synthesis ---

class UnknownClass(UsqzError):
    """Label map contains a class id with no tissue parameters."""


# --- metrics ---

class BinningMismatch(UsqzError):
    """Two histograms use different binnings and cannot be compared."""


class InsufficientPixels(UsqzError):
    """A tissue region has too few pixels for a stable histogram."""


class GeometryMismatch(UsqzError):
    """Operands do not share the same grid geometry."""


# --- phantom generation ---

class InfeasibleSpec(UsqzError):
    """Phantom spec cannot produce chain-code-encodable contours."""
