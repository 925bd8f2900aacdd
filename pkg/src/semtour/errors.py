"""Exception hierarchy shared by all engine modules.

Every error carries a stable machine-readable ``code`` so that the HTTP
layer can map exceptions to API error payloads without string matching.
"""

from __future__ import annotations


class SemtourError(Exception):
    """Base class for all engine errors."""

    code = "InternalError"
    http_status = 500

    def __init__(self, message: str = "", **detail):
        super().__init__(message or self.code)
        self.detail = detail


# -- dataspace ---------------------------------------------------------------

class HighlightOutsideSelection(SemtourError):
    code = "HighlightOutsideSelection"
    http_status = 422


class AlreadySequenced(SemtourError):
    code = "AlreadySequenced"
    http_status = 409


class UnknownScene(SemtourError):
    code = "UnknownScene"
    http_status = 404


# -- knowledge graph ---------------------------------------------------------

class DuplicateId(SemtourError):
    code = "DuplicateId"
    http_status = 409


class DanglingSource(SemtourError):
    code = "DanglingSource"
    http_status = 422


class UnknownEntity(SemtourError):
    code = "UnknownEntity"
    http_status = 404


class UnknownEdge(SemtourError):
    code = "UnknownEdge"
    http_status = 404


class UnknownRelationType(SemtourError):
    code = "UnknownRelationType"
    http_status = 404


class SelfLoopForbidden(SemtourError):
    code = "SelfLoopForbidden"
    http_status = 422


class AmbiguousContainer(SemtourError):
    code = "AmbiguousContainer"
    http_status = 409


# -- tours -------------------------------------------------------------------

class UnknownDocument(SemtourError):
    code = "UnknownDocument"
    http_status = 404


class NoMatches(SemtourError):
    code = "NoMatches"
    http_status = 404


class EmptyTour(SemtourError):
    code = "EmptyTour"
    http_status = 422


class SessionMismatch(SemtourError):
    code = "SessionMismatch"
    http_status = 409


# -- sessions ----------------------------------------------------------------

class NotInTour(SemtourError):
    code = "NotInTour"
    http_status = 422


class NotAdjacentToCurrent(SemtourError):
    code = "NotAdjacentToCurrent"
    http_status = 409


class SourceNotVisited(SemtourError):
    code = "SourceNotVisited"
    http_status = 409


class UseStepOrBranch(SemtourError):
    code = "UseStepOrBranch"
    http_status = 409


class RangeOutOfBounds(SemtourError):
    code = "RangeOutOfBounds"
    http_status = 422


class SpanOutOfBounds(SemtourError):
    code = "SpanOutOfBounds"
    http_status = 422


class UnknownEvent(SemtourError):
    code = "UnknownEvent"
    http_status = 404


class InvalidProvenance(SemtourError):
    code = "InvalidProvenance"
    http_status = 422


# -- persistence -------------------------------------------------------------

class SchemaError(SemtourError):
    code = "SchemaError"
    http_status = 422


class StoreIOError(SemtourError):
    code = "StoreIOError"
    http_status = 500


class UnknownSession(SemtourError):
    code = "UnknownSession"
    http_status = 404
