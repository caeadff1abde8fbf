"""Exception hierarchy shared by all modules."""


class ForgeError(Exception):
    """Base class for every error raised by this package."""


class DataError(ForgeError):
    """Problem with input data (manifests, audio, subtitles)."""


class ConfigError(ForgeError):
    """Invalid configuration value or combination."""


# corpus


class MissingColumn(DataError):
    def __init__(self, column, path=None):
        self.column = column
        where = f" in {path}" if path else ""
        super().__init__(f"missing required column {column!r}{where}")


class DuplicateClipId(DataError):
    def __init__(self, clip_id):
        self.clip_id = clip_id
        super().__init__(f"duplicate clip_id {clip_id!r}")


class MalformedRow(DataError):
    def __init__(self, row, reason=""):
        self.row = row
        super().__init__(f"malformed row {row}" + (f": {reason}" if reason else ""))


class EmptyCorpus(DataError):
    pass


class InsufficientData(DataError):
    def __init__(self, available, requested, unit="clips"):
        self.available = available
        self.requested = requested
        super().__init__(f"insufficient data: {available} {unit} available, {requested} requested")


# audio


class AudioError(DataError):
    pass


class UnsupportedFormat(AudioError):
    pass


class CorruptHeader(AudioError):
    pass


class IoFailure(AudioError):
    pass


class DiskFull(IoFailure):
    pass


class RateMismatch(AudioError):
    pass


class OverlapTooLarge(AudioError):
    pass


# vad / builder


class NoSpeechDetected(DataError):
    pass


class NoPlanPossible(DataError):
    pass


class InfeasiblePlan(DataError):
    pass


# metrics


class EmptyReference(DataError):
    pass


class LengthMismatch(DataError):
    pass


class SrtError(DataError):
    pass


class MalformedTimestamp(SrtError):
    def __init__(self, block, detail=""):
        self.block = block
        super().__init__(f"malformed timestamp in block {block}" + (f": {detail}" if detail else ""))


class MalformedBlock(SrtError):
    def __init__(self, block, detail=""):
        self.block = block
        super().__init__(f"malformed block {block}" + (f": {detail}" if detail else ""))


class NonMonotonicBlocks(SrtError):
    pass


class EmptyDocument(SrtError):
    pass


class EmptyDocumentWarning(UserWarning):
    pass
