"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class UnknownVertexError(KeyError):
    """A vertex id was looked up in a graph that does not contain it."""

    def __init__(self, vertex: str):
        super().__init__(vertex)
        self.vertex = vertex

    def __str__(self) -> str:
        return f"unknown vertex {self.vertex!r}"


class TrailParseError(ValidationError):
    """No usable trail could be parsed from a stream.

    ``errors`` holds ``(line_number, message)`` pairs for every rejected line.
    """

    def __init__(self, message: str, errors: list[tuple[int, str]] | None = None):
        super().__init__(message)
        self.errors = list(errors or [])
