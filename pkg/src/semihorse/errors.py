"""Structured error types shared by all modules."""

from __future__ import annotations


class SemihorseError(Exception):
    """Base class for all structured failures raised by the package."""

    kind = "error"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class DomainError(SemihorseError, ValueError):
    """Invalid input: alphabet mismatch, bad parameters, malformed files."""

    kind = "domain"


class ResourceError(SemihorseError):
    """A configured ceiling (automaton states, enumeration size) was exceeded."""

    kind = "resource"

    def __init__(self, message: str, *, resource: str = "states", limit: int | None = None,
                 observed: int | None = None):
        super().__init__(message)
        self.resource = resource
        self.limit = limit
        self.observed = observed

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(resource=self.resource, limit=self.limit, observed=self.observed)
        return d


class StructuredFailure(SemihorseError):
    """A construction could not complete; ``stage`` names where it stopped."""

    kind = "failure"

    def __init__(self, message: str, *, stage: str, detail: dict | None = None):
        super().__init__(message)
        self.stage = stage
        self.detail = detail or {}

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(stage=self.stage, detail=self.detail)
        return d


class InvariantBreach(SemihorseError):
    """An internal invariant check failed. Always a bug, never user error."""

    kind = "invariant"


class LiftError(StructuredFailure):
    """No point of the semi-horseshoe lifts the requested symbolic target."""

    kind = "lift"

    def __init__(self, message: str, *, detail: dict | None = None):
        super().__init__(message, stage="lift", detail=detail)
