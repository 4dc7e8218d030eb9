"""Exception hierarchy for the voiceid package."""


class VoiceIdError(Exception):
    """Base class for all domain errors raised by this package."""


# -- audio / dsp --------------------------------------------------------

class NotWavError(VoiceIdError):
    """File is not a RIFF/WAVE container."""


class UnsupportedFormatError(VoiceIdError):
    """WAV file exists but is not PCM 16-bit mono 16 kHz."""


class TooShortError(VoiceIdError):
    """Signal shorter than one analysis window (512 samples)."""


class AllSilentError(VoiceIdError):
    """Every frame has exactly zero energy; no reference level exists."""


# -- network ------------------------------------------------------------

class DimensionMismatchError(VoiceIdError):
    """Feature kind or tensor shape does not match the network."""


class LabelOutOfRangeError(VoiceIdError):
    """Class label outside [0, num_classes)."""


class CorpusTooSmallError(VoiceIdError):
    """Training corpus does not meet the minimum speaker/utterance counts."""


class SegmentTooShortError(VoiceIdError):
    """No utterance long enough for the configured crop length."""


class BadMagicError(VoiceIdError):
    """Weight file does not start with the expected magic bytes."""


class VersionMismatchError(VoiceIdError):
    """Weight file magic is recognized but the version is not supported."""


class ChecksumMismatchError(VoiceIdError):
    """Weight file payload CRC32 does not match."""


class TruncatedFileError(VoiceIdError):
    """Weight file ends before the declared payload is complete."""


# -- embedding ----------------------------------------------------------

class ZeroEmbeddingError(VoiceIdError):
    """Raw embedding is (numerically) the zero vector; cannot normalize."""


# -- identification -----------------------------------------------------

class InvalidNameError(VoiceIdError):
    """Speaker name is empty or otherwise unusable."""


class BadEmbeddingError(VoiceIdError):
    """Embedding is not unit-norm or has the wrong dimension."""


class NoEntriesError(VoiceIdError):
    """Speaker has no enrolled embeddings."""


class EmptyDbError(VoiceIdError):
    """Identification requested against a database with no speakers."""


class ParseError(VoiceIdError):
    """Database file is not valid JSON or violates the schema."""


class SchemaVersionMismatchError(VoiceIdError):
    """Database file schema version is missing or unsupported."""


# -- evaluation ---------------------------------------------------------

class MalformedLineError(VoiceIdError):
    """Trial list line does not parse; carries the 1-based line number."""

    def __init__(self, line_no: int, line: str):
        super().__init__(f"malformed trial at line {line_no}: {line!r}")
        self.line_no = line_no


class OneClassOnlyError(VoiceIdError):
    """EER needs at least one same-speaker and one different-speaker trial."""
