"""Exception hierarchy shared by all toolkit modules."""

from typing import List, Optional


class OctmixError(Exception):
    """Base class for every error raised by the toolkit."""


# Signal processing

class FilterSpecError(OctmixError):
    """Invalid filter specification (even tap count, non-positive cutoff, ...)."""


class WindowTooShortError(OctmixError):
    """Filter kernel is too long for the window it is applied to."""


# Augmentation

class AugmentationError(OctmixError):
    """Invalid augmentation input or policy."""


class InvalidParameterError(AugmentationError):
    """Augmentation hyper-parameter outside its domain."""


class ChannelGroupingError(AugmentationError):
    """Channel count cannot be grouped into (x, y, z) triples."""


# Network / trainer

class ShapeError(OctmixError):
    """Tensor shapes do not match the model contract."""


class FreezeContractError(OctmixError):
    """A phase that requires frozen extractors found a trainable one."""


class UnknownVariantError(OctmixError):
    """Experiment variant name is not in the variant table."""


# Dataset

class DatasetError(OctmixError):
    """Invalid recording, split or synthetic corpus specification."""


class InsufficientSubjectsError(DatasetError):
    """Not enough distinct subjects for the requested split."""


class CorpusParseError(DatasetError):
    """Malformed manifest or recording file."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


# Metrics

class UndefinedMetricError(OctmixError):
    """Metric requested on an empty confusion matrix or empty trial list."""


# Persistence

class ContainerFormatError(OctmixError):
    """Tensor container bytes do not follow the OCTM layout."""


# CLI

class ConfigError(OctmixError):
    """Run configuration failed validation; carries every problem found."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        message = "Configuration errors:\n" + "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(message)
