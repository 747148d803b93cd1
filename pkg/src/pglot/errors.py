"""Exception types shared across the toolkit."""

from __future__ import annotations


class PglotError(Exception):
    """Base class for all pglot domain errors."""


# --- forging -----------------------------------------------------------

class IllegalRecipe(PglotError):
    """The (covert, overt, method) triple is not in the combination matrix."""


class DonorInvalid(PglotError):
    """A donor file does not validate as its declared format."""


class PayloadTooLarge(PglotError):
    """Parasite payload exceeds the insertion point's capacity."""


# --- corpus ------------------------------------------------------------

class UnsupportedSynth(PglotError):
    """Requested synthesis for a fixture-only format (JPEG, RAR, PE)."""


class InsufficientDonors(PglotError):
    """Not enough distinct donors to satisfy the dataset config."""


class ForgeFailure(PglotError):
    """A recipe failed during dataset generation; carries the recipe."""


# --- features / training ----------------------------------------------

class EmptyCorpus(PglotError):
    """Vocabulary construction got no nonempty training samples."""


class EmptyDataset(PglotError):
    """Training was invoked with no samples."""


class SpecMismatch(PglotError):
    """A feature vector does not match the model's feature spec."""


# --- model files -------------------------------------------------------

class VersionMismatch(PglotError):
    """Model file version or embedded config differs from what was expected."""


class Corrupt(PglotError):
    """Model file is truncated or fails its integrity check."""


# --- sanitizer ---------------------------------------------------------

class NotAnImage(PglotError):
    """Input does not identify as one of the supported image formats."""


class InvalidImage(PglotError):
    """Input identifies as an image but fails structural validation."""


# --- evaluation --------------------------------------------------------

class NoPositives(PglotError):
    """PR-AUC is undefined without at least one positive label."""


class ToolMissing(PglotError):
    """An external tool binary is not installed."""


class ParseFailure(PglotError):
    """External tool output could not be parsed; raw output retained."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw
