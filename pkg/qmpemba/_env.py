from __future__ import annotations

import logging
import os

__all__: list[str] = []


def env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except (TypeError, ValueError):
        return default


def env_log_level(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    raw = raw.strip()
    if raw.isdigit():
        return int(raw)
    level = logging.getLevelName(raw.upper())
    return level if isinstance(level, int) else default


def resolve_workers(requested: int | None = None) -> int:
    """Number of worker processes for ensemble runs.

    *requested* wins when given; otherwise ``MPEMBA_THREADS`` is used.
    Zero (or a negative value) means one worker per CPU.
    """
    n = requested if requested is not None else env_int("MPEMBA_THREADS", 0)
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)
