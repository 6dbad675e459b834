"""Wall-clock deadlines shared by all workers."""

from __future__ import annotations

import math
import threading
import time


class Deadline:
    """Absolute deadline on the monotonic clock plus a cancellation flag.

    ``Deadline(None)`` never expires on its own but can still be stopped.
    """

    def __init__(self, seconds: float | None = None):
        self.start = time.monotonic()
        self.end = math.inf if seconds is None else self.start + seconds
        self._stop = threading.Event()

    @classmethod
    def coerce(cls, value) -> "Deadline":
        if isinstance(value, Deadline):
            return value
        return cls(value)

    def expired(self) -> bool:
        return self._stop.is_set() or time.monotonic() >= self.end

    def remaining(self) -> float:
        if self._stop.is_set():
            return 0.0
        return max(0.0, self.end - time.monotonic())

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def stop(self) -> None:
        self._stop.set()
