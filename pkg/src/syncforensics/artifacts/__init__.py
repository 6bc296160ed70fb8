"""Readers and writers for on-disk client artifacts."""

from ._schema import (
    ArtifactError,
    HashLengthError,
    PieceCountMismatch,
    RangeError,
    SchemaViolation,
)
from .locate import APP_DIRS, ArtifactSet, OSProfile, RootNotFound, ShareLocation, detect_profile, locate_artifacts
from .manifest import (
    STATE_DELETED,
    STATE_PRESENT,
    AggregateMismatch,
    FileEntry,
    FileMeta,
    ShareManifest,
    manifest_filename,
    parse_manifest,
    write_manifest,
)
from .settings import Settings, parse_settings, write_settings
from .syncdat import (
    PeerHistory,
    SyncDat,
    SyncDatConfig,
    dump_sync_dat,
    parse_sync_dat,
    read_sync_dat,
    write_sync_dat,
)
from .syncid import SYNC_ID_NAME, parse_sync_id, write_sync_id
from .synclog import LogEvent, LogEventKind, LogWarning, SyncLog, parse_sync_log, write_sync_log

__all__ = [
    "APP_DIRS", "AggregateMismatch", "ArtifactError", "ArtifactSet", "FileEntry", "FileMeta",
    "HashLengthError", "LogEvent", "LogEventKind", "LogWarning", "OSProfile", "PeerHistory",
    "PieceCountMismatch", "RangeError", "RootNotFound", "STATE_DELETED", "STATE_PRESENT",
    "SYNC_ID_NAME", "SchemaViolation", "Settings", "ShareLocation", "ShareManifest", "SyncDat",
    "SyncDatConfig", "SyncLog", "detect_profile", "dump_sync_dat", "locate_artifacts",
    "manifest_filename", "parse_manifest", "parse_settings", "parse_sync_dat", "parse_sync_id",
    "parse_sync_log", "read_sync_dat", "write_manifest", "write_settings", "write_sync_dat",
    "write_sync_id", "write_sync_log",
]
