"""``settings.dat``: node-wide preferences."""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import bencode
from ..integrity import DEFAULT_PIECE_LEN
from ._schema import RangeError, SchemaViolation, extras, get_flag, get_int, require_dict

CHECKIN_MIN, CHECKIN_MAX = 10, 60

_KEYS = frozenset((b"sync_archive_enabled", b"archive_days", b"piece_len", b"checkin_minutes"))


@dataclass
class Settings:
    sync_archive_enabled: int = 1
    archive_days: int = 30
    piece_len: int = DEFAULT_PIECE_LEN
    checkin_minutes: int = 30
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not CHECKIN_MIN <= self.checkin_minutes <= CHECKIN_MAX:
            raise RangeError(
                f"checkin_minutes must lie in [{CHECKIN_MIN}, {CHECKIN_MAX}], got {self.checkin_minutes}"
            )
        if self.piece_len <= 0:
            raise RangeError(f"piece_len must be positive, got {self.piece_len}")
        if self.archive_days < 0:
            raise RangeError(f"archive_days must be non-negative, got {self.archive_days}")
        if self.sync_archive_enabled not in (0, 1):
            raise SchemaViolation("sync_archive_enabled must be 0 or 1")

    @property
    def checkin_ms(self) -> int:
        return self.checkin_minutes * 60_000

    @property
    def archive_ms(self) -> int:
        return self.archive_days * 86_400_000


def parse_settings(data: bytes) -> Settings:
    d = require_dict(bencode.decode(data), "settings.dat")
    what = "settings.dat"
    return Settings(
        sync_archive_enabled=get_flag(d, b"sync_archive_enabled", what, 1),
        archive_days=get_int(d, b"archive_days", what, 30),
        piece_len=get_int(d, b"piece_len", what, DEFAULT_PIECE_LEN),
        checkin_minutes=get_int(d, b"checkin_minutes", what, 30),
        extra=extras(d, _KEYS),
    )


def write_settings(settings: Settings) -> bytes:
    return bencode.encode({
        **settings.extra,
        b"sync_archive_enabled": settings.sync_archive_enabled,
        b"archive_days": settings.archive_days,
        b"piece_len": settings.piece_len,
        b"checkin_minutes": settings.checkin_minutes,
    })
