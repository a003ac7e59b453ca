"""Exception types shared across the package."""

from __future__ import annotations


class PatchSimError(Exception):
    """Base class for all errors raised by this package."""


class DecodeError(PatchSimError):
    """Raised when image bytes cannot be decoded or have an unusable shape."""


class InvalidPatchSizeError(PatchSimError):
    """Raised when a patch size is out of the supported range for an image."""


class OutOfBoundsError(PatchSimError):
    """Raised when a pixel coordinate or patch id lies outside its domain."""


class InvalidParamsError(PatchSimError):
    """Raised when feature or search parameters fail validation."""


class IndexFormatError(PatchSimError):
    """Raised when an index file is malformed, truncated, or inconsistent."""
