"""Exception types shared across the package.

The CLI maps these onto process exit codes: FormatError -> 3, numeric
failures -> 4, everything else that is the caller's fault -> 2.
"""


class DenoiseError(Exception):
    """Base class for all errors raised by this package."""


class DimsError(DenoiseError):
    """Operands have incompatible or invalid dimensions."""


class NotPowerOfTwoError(DenoiseError):
    """A size that must be a power of two (>= 2) is not."""


class PatchSizeError(DenoiseError):
    """Image too small for the requested patch geometry."""


class OddGroupError(DenoiseError):
    """Group size must be even for the alternating eigen-pair."""


class EmptyTrainingSetError(DenoiseError):
    """Basis training requires at least one patch."""


class CoordError(DenoiseError):
    """Patch coordinates fall outside the image."""


class FormatError(DenoiseError):
    """File contents do not match the expected on-disk format."""


class NumericError(DenoiseError):
    """Non-finite values or a failed numerical decomposition."""
