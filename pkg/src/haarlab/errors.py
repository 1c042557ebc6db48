"""Exception types shared across the package."""


class HaarLabError(Exception):
    """Base class for all package-specific errors."""


class ResolutionTooCoarse(HaarLabError):
    """The grid cannot resolve the requested scale."""


class FourierFloorViolation(HaarLabError):
    """A kernel transfer function dips below the certified floor."""


class MarginViolation(HaarLabError):
    """A field's declared support margin is too small for the operation."""


class LevelTooFine(HaarLabError):
    """A Haar/averaging level exceeds what the grid represents exactly."""


class MaskOutOfRange(HaarLabError):
    """A masking coefficient exceeds 1 in absolute value."""


class DegenerateFit(HaarLabError):
    """All samples equal; the fit is degenerate."""


class IndexOutsideBox(HaarLabError):
    """A Haar index does not fit inside the grid box."""
