"""Exception hierarchy shared across the engine modules."""

from __future__ import annotations


class FusionkitError(Exception):
    """Base class for all engine errors."""


# --- ingest ---------------------------------------------------------------


class MalformedLine(FusionkitError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateVideoId(FusionkitError):
    def __init__(self, video_id: str):
        super().__init__(f"duplicate video_id {video_id!r}")
        self.video_id = video_id


class AdapterFailure(FusionkitError):
    """Extractor adapter exited nonzero or emitted unusable output."""


class AdapterTimeout(FusionkitError):
    """Extractor adapter exceeded its time budget."""


class EmptyOutput(FusionkitError):
    def __init__(self, video_id: str):
        super().__init__(f"adapter produced no keyframes for non-empty video {video_id!r}")
        self.video_id = video_id


class CorruptMap(FusionkitError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class VersionMismatch(FusionkitError):
    def __init__(self, found: str):
        super().__init__(f"unsupported map version {found!r}")
        self.found = found


# --- embedding ------------------------------------------------------------


class ProviderUnavailable(FusionkitError):
    """A model provider could not be reached or returned a transport error."""


class DimMismatch(FusionkitError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected dim {expected}, got {got}")
        self.expected = expected
        self.got = got


class NonFiniteOutput(FusionkitError):
    """Provider returned NaN or infinity."""


class ZeroVector(FusionkitError):
    """Cannot normalize a vector with zero norm."""


class UnknownKeyframe(FusionkitError):
    def __init__(self, keyframe_id: str):
        super().__init__(f"unknown keyframe {keyframe_id!r}")
        self.keyframe_id = keyframe_id


class DuplicateKeyframe(FusionkitError):
    def __init__(self, keyframe_id: str):
        super().__init__(f"keyframe {keyframe_id!r} already stored")
        self.keyframe_id = keyframe_id


class CorruptStore(FusionkitError):
    """Vector store failed a header or size consistency check."""


# --- search ---------------------------------------------------------------


class EmptySpace(FusionkitError):
    """Search requested against a space with no vectors."""


class SpaceMismatch(FusionkitError):
    """The two model spaces do not cover the same keyframe set."""


class InvalidQuery(FusionkitError):
    """Query text empty, k < 1, or other bad search parameters."""


# --- textindex ------------------------------------------------------------


class DuplicateSegment(FusionkitError):
    def __init__(self, segment_id: str):
        super().__init__(f"segment {segment_id!r} already indexed")
        self.segment_id = segment_id


class EmptyAfterTokenize(FusionkitError):
    """Segment text produced no tokens."""


class EmptyQuery(FusionkitError):
    """Query produced no tokens."""


# --- rerank ---------------------------------------------------------------


class BadQuestionCount(FusionkitError):
    def __init__(self, got: int):
        super().__init__(f"provider returned {got} questions, expected 3")
        self.got = got


# --- qa -------------------------------------------------------------------


class EmptyQuestion(FusionkitError):
    """Question string is empty."""


class NoKeyframes(FusionkitError):
    def __init__(self, video_id: str):
        super().__init__(f"video {video_id!r} has no keyframes")
        self.video_id = video_id


class DeadlineExceeded(FusionkitError):
    """QA deadline fired before all provider calls completed.

    Carries whatever per-frame answers completed in time.
    """

    def __init__(self, message: str, per_frame: list | None = None):
        super().__init__(message)
        self.per_frame = per_frame or []


# --- config ---------------------------------------------------------------


class ConfigError(FusionkitError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason
