"""Exception hierarchy shared by every histent module."""


class HistentError(Exception):
    """Base class. ``line``/``column`` are 1-based and optional."""

    def __init__(self, message, *, line=None, column=None, source=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.source = source

    def to_dict(self):
        out = {"error": type(self).__name__, "message": self.message}
        if self.source is not None:
            out["source"] = str(self.source)
        if self.line is not None:
            out["line"] = self.line
        if self.column is not None:
            out["column"] = self.column
        return out

    def __str__(self):
        where = ""
        if self.source is not None:
            where += f"{self.source}:"
        if self.line is not None:
            where += f"{self.line}:"
            if self.column is not None:
                where += f"{self.column}:"
        return f"{where} {self.message}" if where else self.message


# corpus
class MalformedInput(HistentError):
    pass


class OffsetOutOfRange(HistentError):
    pass


class UnknownConcept(HistentError):
    pass


class SurfaceMismatch(HistentError):
    pass


class UnclosedTag(HistentError):
    pass


class UnknownClass(HistentError):
    pass


class NestedTag(HistentError):
    pass


# bio
class OverlappingEntities(HistentError):
    pass


class LengthMismatch(HistentError):
    pass


# matcher
class CrossDocumentEntity(HistentError):
    pass


class MissingTotal(HistentError):
    pass


class InstanceTooLarge(HistentError):
    pass


# stats
class DomainError(HistentError, ValueError):
    pass


class ZeroVariance(HistentError):
    pass


class EmptyMargin(HistentError):
    pass


# analysis
class EmptyCategory(HistentError):
    pass


class UnknownHeaderGroup(HistentError):
    pass


# tagger
class NonFiniteLoss(HistentError):
    pass


class EmptyFold(HistentError):
    pass


class MissingBme(HistentError):
    pass


# cli
class DocIdMismatch(HistentError):
    pass
