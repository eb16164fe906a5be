"""Exception taxonomy shared across the package.

The CLI maps these onto distinct process exit codes, so keep the
hierarchy flat and the categories coarse.
"""


class DeepConnError(Exception):
    """Base class for all library errors."""


class ConfigError(DeepConnError):
    """Invalid configuration value or combination (rejected before any work)."""


class ShapeError(DeepConnError):
    """Array shapes incompatible with the requested operation."""


class NumericFault(DeepConnError):
    """A NaN or Inf showed up where only finite values are allowed."""


class DataFormatError(DeepConnError):
    """Malformed input file (review dump, embedding file, cache)."""


class CheckpointError(DeepConnError):
    """Checkpoint file is truncated, corrupt, or inconsistent with its manifest."""


class InfeasibleSplitError(DeepConnError):
    """The requested split cannot be realized on this dataset."""


class UnknownEntityError(DeepConnError):
    """Lookup of a user or item that the structure has never seen."""
