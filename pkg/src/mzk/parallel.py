"""Worker-count control shared by batch helpers and the CLI.

MZK_THREADS caps thread pools; unset or 1 means serial.  Results never
depend on the worker count, only wall time does.
"""

import os

from .errors import ConfigError


def worker_count() -> int:
    raw = os.environ.get("MZK_THREADS", "1").strip()
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"MZK_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"MZK_THREADS must be at least 1, got {value}")
    return value
