"""Exception types raised by qmpemba."""

from __future__ import annotations

__all__ = [
    "MpembaError",
    "InvalidArgumentError",
    "InvalidGateError",
    "ResourceLimitError",
    "ConfigError",
]


class MpembaError(Exception):
    pass


class InvalidArgumentError(MpembaError, ValueError):
    """An argument is outside the domain an operation accepts."""


class InvalidGateError(InvalidArgumentError):
    """A gate matrix is not unitary within tolerance."""


class ResourceLimitError(MpembaError, RuntimeError):
    """A dense representation would exceed the supported size."""


class ConfigError(MpembaError, ValueError):
    """A configuration document is malformed.

    *key* and *line* point at the offending assignment when known.
    """

    def __init__(self, message: str, key: str | None = None,
                 line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
