"""Exception types shared across the package."""


class DickeError(Exception):
    """Base class for all package errors."""


class InvalidParamsError(DickeError, ValueError):
    """Model or run parameters violate a precondition."""


class CapacityError(DickeError):
    """Requested Hilbert-space dimension exceeds the dense-storage budget."""


class CutoffTooSmallError(DickeError):
    """Photon cutoff cannot hold the requested state to tolerance."""


class PairingError(DickeError):
    """Spectral data and quench/state parameters do not describe the same system."""


class NumericalFailureError(DickeError):
    """An eigensolver or downstream numerical consistency check failed."""

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


class CacheCorruptionError(DickeError):
    """A cache file failed its integrity checks (bad magic, length, or CRC)."""
