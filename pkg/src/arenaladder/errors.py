"""Shared exception types for the arenaladder package."""

from __future__ import annotations


class ArenaLadderError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ArenaLadderError):
    """A configuration value violates a documented bound."""


class UsageError(ArenaLadderError):
    """An operation was called outside its precondition."""


class CapacityError(ArenaLadderError):
    """An exact computation exceeded its configured size budget."""

    def __init__(self, message: str, measured: int | None = None):
        super().__init__(message)
        self.measured = measured


class AliasingError(ArenaLadderError):
    """Two distinct reachable states share one observation, so an
    observation-keyed exact computation is not well defined for this config."""


class StoreError(ArenaLadderError):
    """A persisted artifact is malformed, truncated, or inconsistent."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ProtocolError(ArenaLadderError):
    """A play-session message violated the wire protocol."""
