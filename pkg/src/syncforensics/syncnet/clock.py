"""Deterministic discrete-event scheduler.

Events fire in (time, insertion sequence) order, so two runs fed the same
inputs produce the same trace.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass(order=True)
class EventHandle:
    time: int
    seq: int
    callback: Callable[..., Any] = field(compare=False)
    args: tuple = field(compare=False, default=())
    label: str = field(compare=False, default="")
    cancelled: bool = field(compare=False, default=False)


class SimClock:
    def __init__(self):
        self.now = 0
        self._queue: list[EventHandle] = []
        self._seq = itertools.count()
        self.trace: list[tuple[int, int, str]] = []

    def schedule(self, delay: int, callback: Callable[..., Any], *args, label: str = "") -> EventHandle:
        if delay < 0:
            raise ValueError(f"cannot schedule into the past (delay={delay})")
        handle = EventHandle(self.now + int(delay), next(self._seq), callback, args, label)
        heapq.heappush(self._queue, handle)
        return handle

    def cancel(self, handle: EventHandle) -> None:
        handle.cancelled = True

    def pending(self) -> int:
        return sum(1 for h in self._queue if not h.cancelled)

    def next_time(self) -> int | None:
        while self._queue and self._queue[0].cancelled:
            heapq.heappop(self._queue)
        return self._queue[0].time if self._queue else None

    def run_until(self, t: int, stop: Callable[[], bool] | None = None) -> int:
        """Fire every event due at or before ``t``; returns how many fired.

        With ``stop`` the run ends right after the first event that makes it
        true, leaving ``now`` at that event's time.
        """
        processed = 0
        while self._queue and self._queue[0].time <= t:
            handle = heapq.heappop(self._queue)
            if handle.cancelled:
                continue
            self.now = handle.time
            self.trace.append((handle.time, handle.seq, handle.label))
            handle.callback(*handle.args)
            processed += 1
            if stop is not None and stop():
                return processed
        self.now = max(self.now, t)
        return processed

    def advance(self, ms: int) -> None:
        self.run_until(self.now + ms)

    def trace_digest(self) -> str:
        h = hashlib.sha1()
        for time, seq, label in self.trace:
            h.update(f"{time} {seq} {label}\n".encode())
        return h.hexdigest().upper()
