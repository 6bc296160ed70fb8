"""``sync.log``: one event per LF-terminated UTF-8 line.

    <epoch> <EVENT> [share=<40 hex>] [peer=<40 hex>] [host=<addr:port>] [path=<pct-encoded>]

Lines that do not fit are never dropped silently; they come back as
warnings carrying the raw text.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from urllib.parse import quote, unquote

from ..identity import PeerID, ShareID


class LogEventKind(str, enum.Enum):
    SYNC_START = "SYNC_START"
    DOWNLOAD = "DOWNLOAD"
    UPLOAD = "UPLOAD"
    DELETE = "DELETE"
    INVALIDATE = "INVALIDATE"
    PEER_CONNECT = "PEER_CONNECT"


_FIELD_ORDER = ("share", "peer", "host", "path")
_HEX40 = re.compile(r"[0-9A-Fa-f]{40}")
_HOST = re.compile(r"[^\s:]+:\d{1,5}")


@dataclass(frozen=True)
class LogEvent:
    timestamp: int
    event: LogEventKind
    peer_id: PeerID | None = None
    host: str | None = None
    path: str | None = None
    share: ShareID | None = None

    def format(self) -> str:
        parts = [str(self.timestamp), self.event.value]
        if self.share is not None:
            parts.append(f"share={self.share.hex}")
        if self.peer_id is not None:
            parts.append(f"peer={self.peer_id.hex}")
        if self.host is not None:
            parts.append(f"host={self.host}")
        if self.path is not None:
            parts.append(f"path={quote(self.path, safe='/')}")
        return " ".join(parts)


@dataclass(frozen=True)
class LogWarning:
    line_no: int
    raw: str
    reason: str


@dataclass
class SyncLog:
    events: list[LogEvent] = field(default_factory=list)
    warnings: list[LogWarning] = field(default_factory=list)


class _BadLine(Exception):
    pass


def _parse_line(line: str) -> LogEvent:
    tokens = line.split(" ")
    if len(tokens) < 2:
        raise _BadLine("expected '<epoch> <EVENT>'")
    if not re.fullmatch(r"[0-9]{1,18}", tokens[0]):
        raise _BadLine(f"bad timestamp {tokens[0]!r}")
    try:
        kind = LogEventKind(tokens[1])
    except ValueError:
        raise _BadLine(f"unknown event {tokens[1]!r}") from None
    fields: dict[str, str] = {}
    for token in tokens[2:]:
        key, sep, value = token.partition("=")
        if not sep or key not in _FIELD_ORDER:
            raise _BadLine(f"bad field {token!r}")
        if key in fields:
            raise _BadLine(f"duplicate field {key!r}")
        fields[key] = value
    for key in ("share", "peer"):
        if key in fields and not _HEX40.fullmatch(fields[key]):
            raise _BadLine(f"{key} must be 40 hex digits")
    if "host" in fields and not _HOST.fullmatch(fields["host"]):
        raise _BadLine(f"bad host {fields['host']!r}")
    return LogEvent(
        timestamp=int(tokens[0]),
        event=kind,
        peer_id=PeerID.from_hex(fields["peer"]) if "peer" in fields else None,
        host=fields.get("host"),
        path=unquote(fields["path"]) if "path" in fields else None,
        share=ShareID.from_hex(fields["share"]) if "share" in fields else None,
    )


def parse_sync_log(text: str | bytes) -> SyncLog:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    log = SyncLog()
    last = None
    for n, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line:
            continue
        try:
            event = _parse_line(line)
        except _BadLine as exc:
            log.warnings.append(LogWarning(n, line, str(exc)))
            continue
        if last is not None and event.timestamp < last:
            log.warnings.append(LogWarning(n, line, "timestamp goes backwards"))
        last = event.timestamp
        log.events.append(event)
    return log


def write_sync_log(events: list[LogEvent]) -> str:
    return "".join(e.format() + "\n" for e in events)
