"""Exception taxonomy shared across the package."""


class VesselSegError(Exception):
    """Base class for all package-specific failures."""


class ImageFormatError(VesselSegError):
    """Raster exists but cannot be decoded (unsupported or corrupt format)."""


class DegenerateMaskError(VesselSegError):
    """FOV extraction produced an empty or unusable foreground."""


class DegenerateResponseError(VesselSegError):
    """Response plane has zero variance over the FOV; cannot normalize."""


class NumericalError(VesselSegError):
    """An iterative scheme produced non-finite values."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class ManifestError(VesselSegError):
    """Dataset manifest is malformed or references missing/mismatched files."""


class PipelineError(VesselSegError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
