"""Exception types raised across the pipeline."""

from __future__ import annotations


class EarlyDetectError(Exception):
    """Base class for errors the CLI reports as a one-line failure."""


class DatasetLoadError(EarlyDetectError):
    """A stream, label or manifest file could not be read or parsed."""


class CodebookError(EarlyDetectError):
    """Not enough distinct frames to fit the requested vocabulary."""


class MissingClassError(EarlyDetectError):
    """One or more classes have no labeled training instances."""

    def __init__(self, kind: str, missing: list[str]):
        self.kind = kind
        self.missing = sorted(missing)
        super().__init__(
            f"{kind} classes without training instances: {', '.join(self.missing)}"
        )


class BundleVersionError(EarlyDetectError):
    """A model bundle was written by an incompatible format version."""


class ConfigError(EarlyDetectError):
    """Bad configuration key, override, or name lookup."""
