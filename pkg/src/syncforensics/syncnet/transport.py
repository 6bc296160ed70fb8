"""Datagram buses that carry packed messages between simulated addresses.

``MemoryTransport`` delivers through the scheduler after a seeded latency
and is what every test uses.  ``LoopbackTransport`` pushes the same bytes
through real UDP sockets on 127.0.0.1; arrivals are queued and handed to the
scheduler only when the network pumps them, so node state never leaves the
event loop.
"""

from __future__ import annotations

import queue
import selectors
import socket
import threading
import time
from typing import Callable

Deliver = Callable[[str, str, bytes], None]


class MemoryTransport:
    synchronous = True

    def __init__(self):
        self.clock = None
        self.deliver: Deliver | None = None

    def attach(self, clock, deliver: Deliver) -> None:
        self.clock = clock
        self.deliver = deliver

    def bind(self, address: str) -> None:
        pass

    def send(self, src: str, dst: str, data: bytes, latency_ms: int) -> None:
        self.clock.schedule(latency_ms, self.deliver, src, dst, data, label=f"deliver {src}->{dst}")

    def pump(self, max_wait_ms: int) -> int:
        return 0

    def close(self) -> None:
        pass


class LoopbackTransport:
    """Real UDP on the loopback interface; for demonstrations only."""

    synchronous = False
    MAX_DATAGRAM = 65507

    def __init__(self, host: str = "127.0.0.1"):
        self.host = host
        self.clock = None
        self.deliver: Deliver | None = None
        self._sockets: dict[str, socket.socket] = {}
        self._ports: dict[int, str] = {}
        self._inbox: queue.Queue = queue.Queue()
        self._selector = selectors.DefaultSelector()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._lock = threading.Lock()

    def attach(self, clock, deliver: Deliver) -> None:
        self.clock = clock
        self.deliver = deliver

    def bind(self, address: str) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.bind((self.host, 0))
        sock.setblocking(False)
        port = sock.getsockname()[1]
        with self._lock:
            self._sockets[address] = sock
            self._ports[port] = address
            self._selector.register(sock, selectors.EVENT_READ, address)
        if self._thread is None:
            self._thread = threading.Thread(target=self._receive_loop, name="loopback-rx", daemon=True)
            self._thread.start()

    def _receive_loop(self) -> None:
        while not self._stop.is_set():
            for key, _ in self._selector.select(timeout=0.05):
                sock, dst = key.fileobj, key.data
                try:
                    data, (_, port) = sock.recvfrom(self.MAX_DATAGRAM)
                except OSError:
                    continue
                src = self._ports.get(port)
                if src is not None:
                    self._inbox.put((src, dst, data))

    def send(self, src: str, dst: str, data: bytes, latency_ms: int) -> None:
        sock = self._sockets.get(src)
        port = next((p for p, a in self._ports.items() if a == dst), None)
        if sock is None or port is None:
            return
        if len(data) > self.MAX_DATAGRAM:
            raise ValueError(f"datagram of {len(data)} bytes exceeds UDP limit")
        sock.sendto(data, (self.host, port))

    def pump(self, max_wait_ms: int) -> int:
        """Move arrived datagrams into the scheduler; advances sim time by the real wait."""
        started = time.monotonic()
        count = 0
        try:
            item = self._inbox.get(timeout=max(max_wait_ms, 0) / 1000)
        except queue.Empty:
            item = None
        elapsed = int((time.monotonic() - started) * 1000)
        self.clock.advance(elapsed)
        while item is not None:
            src, dst, data = item
            self.clock.schedule(0, self.deliver, src, dst, data, label=f"deliver {src}->{dst}")
            count += 1
            try:
                item = self._inbox.get_nowait()
            except queue.Empty:
                item = None
        return count

    def close(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=1)
        for sock in self._sockets.values():
            self._selector.unregister(sock)
            sock.close()
        self._sockets.clear()
