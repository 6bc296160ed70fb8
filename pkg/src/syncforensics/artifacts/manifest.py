"""``<ShareID>.db``: the per-share file manifest.

Stored as one bencoded dictionary with a ``files`` list (one entry per path
with size, mtime, state flags and the whole-file SHA1 ``hash20``) and a
``meta`` list (piece length, concatenated piece hashes and the aggregate
``hash``).  Entries may carry a ``peer`` key naming the PeerID that produced
that version.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import bencode, integrity
from ..identity import PeerID, ShareID
from ._schema import (
    HashLengthError,
    PieceCountMismatch,
    SchemaViolation,
    extras,
    get_bytes,
    get_int,
    get_list,
    get_text,
    require_dict,
)

STATE_PRESENT = 1
STATE_DELETED = 2

_FILE_KEYS = frozenset((b"path", b"size", b"mtime", b"state", b"invalidated", b"hash20", b"peer"))
_META_KEYS = frozenset((b"path", b"size", b"piece_len", b"pieces", b"hash"))


class AggregateMismatch(SchemaViolation):
    pass


@dataclass
class FileEntry:
    path: str
    size: int
    mtime: int
    hash20: bytes
    state: int = STATE_PRESENT
    invalidated: int = 0
    peer: PeerID | None = None
    extra: dict = field(default_factory=dict)

    @property
    def is_live(self) -> bool:
        return self.state == STATE_PRESENT and not self.invalidated

    def to_bvalue(self) -> dict:
        d = dict(self.extra)
        d.update({
            b"path": self.path.encode("utf-8"),
            b"size": self.size,
            b"mtime": self.mtime,
            b"state": self.state,
            b"invalidated": self.invalidated,
            b"hash20": self.hash20,
        })
        if self.peer is not None:
            d[b"peer"] = self.peer.id
        return d


@dataclass
class FileMeta:
    path: str
    size: int
    piece_len: int
    piece_hashes: tuple[bytes, ...]
    aggregate_hash: bytes
    extra: dict = field(default_factory=dict)

    @property
    def piece_count(self) -> int:
        return len(self.piece_hashes)

    @classmethod
    def from_index(cls, path: str, index: integrity.FileIndex) -> "FileMeta":
        return cls(path, index.size, index.piece_len, index.piece_hashes, index.aggregate_hash)

    def to_bvalue(self) -> dict:
        d = dict(self.extra)
        d.update({
            b"path": self.path.encode("utf-8"),
            b"size": self.size,
            b"piece_len": self.piece_len,
            b"pieces": b"".join(self.piece_hashes),
            b"hash": self.aggregate_hash,
        })
        return d


@dataclass
class ShareManifest:
    share_id: ShareID | None = None
    files: list[FileEntry] = field(default_factory=list)
    meta: list[FileMeta] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list, compare=False)

    def entry(self, path: str) -> FileEntry | None:
        for e in self.files:
            if e.path == path:
                return e
        return None

    def meta_for(self, path: str) -> FileMeta | None:
        for m in self.meta:
            if m.path == path:
                return m
        return None

    def put(self, entry: FileEntry, meta: FileMeta | None) -> None:
        self.files = [e for e in self.files if e.path != entry.path] + [entry]
        self.files.sort(key=lambda e: e.path)
        self.meta = [m for m in self.meta if m.path != entry.path]
        if meta is not None:
            self.meta.append(meta)
            self.meta.sort(key=lambda m: m.path)

    def validate(self) -> list[str]:
        """Check every structural invariant; returns non-fatal warnings."""
        warnings = []
        seen = set()
        for e in self.files:
            if e.path in seen:
                raise SchemaViolation(f"manifest: duplicate file path {e.path!r}")
            seen.add(e.path)
            if len(e.hash20) != integrity.HASH_LEN:
                raise HashLengthError(f"manifest: hash20 of {e.path!r} is {len(e.hash20)} bytes")
            if e.invalidated not in (0, 1):
                raise SchemaViolation(f"manifest: invalidated of {e.path!r} must be 0 or 1")
            if e.size < 0:
                raise SchemaViolation(f"manifest: negative size for {e.path!r}")
            if e.state not in (STATE_PRESENT, STATE_DELETED):
                warnings.append(f"{e.path}: unrecognised state {e.state}")
        metas = {}
        for m in self.meta:
            if m.path in metas:
                raise SchemaViolation(f"manifest: duplicate meta path {m.path!r}")
            metas[m.path] = m
            if m.piece_len <= 0:
                raise SchemaViolation(f"manifest: piece_len of {m.path!r} must be positive")
            for h in m.piece_hashes:
                if len(h) != integrity.HASH_LEN:
                    raise HashLengthError(f"manifest: piece hash of {m.path!r} is {len(h)} bytes")
            if len(m.aggregate_hash) != integrity.HASH_LEN:
                raise HashLengthError(f"manifest: hash of {m.path!r} is {len(m.aggregate_hash)} bytes")
            expected = integrity.piece_count(m.size, m.piece_len)
            if len(m.piece_hashes) != expected:
                raise PieceCountMismatch(
                    f"manifest: {m.path!r} has {len(m.piece_hashes)} piece hashes, expected {expected}"
                )
            if integrity.aggregate_hash(m.piece_hashes) != m.aggregate_hash:
                raise AggregateMismatch(f"manifest: hash of {m.path!r} disagrees with its piece hashes")
        for e in self.files:
            if e.state == STATE_PRESENT and e.path not in metas:
                raise SchemaViolation(f"manifest: present file {e.path!r} has no meta entry")
        return warnings


def _parse_entry(value, i: int) -> FileEntry:
    what = f"manifest files[{i}]"
    d = require_dict(value, what)
    peer = get_bytes(d, b"peer", what, None)
    if peer is not None and len(peer) != 20:
        raise SchemaViolation(f"{what}: peer must be 20 bytes")
    return FileEntry(
        path=get_text(d, b"path", what),
        size=get_int(d, b"size", what),
        mtime=get_int(d, b"mtime", what),
        hash20=get_bytes(d, b"hash20", what),
        state=get_int(d, b"state", what, STATE_PRESENT),
        invalidated=get_int(d, b"invalidated", what, 0),
        peer=PeerID(peer) if peer is not None else None,
        extra=extras(d, _FILE_KEYS),
    )


def _parse_meta(value, i: int) -> FileMeta:
    what = f"manifest meta[{i}]"
    d = require_dict(value, what)
    blob = get_bytes(d, b"pieces", what)
    if len(blob) % integrity.HASH_LEN:
        raise HashLengthError(f"{what}: pieces blob length {len(blob)} is not a multiple of 20")
    return FileMeta(
        path=get_text(d, b"path", what),
        size=get_int(d, b"size", what),
        piece_len=get_int(d, b"piece_len", what),
        piece_hashes=tuple(blob[j : j + 20] for j in range(0, len(blob), 20)),
        aggregate_hash=get_bytes(d, b"hash", what),
        extra=extras(d, _META_KEYS),
    )


def parse_manifest(data: bytes, share_id: ShareID | None = None) -> ShareManifest:
    top = require_dict(bencode.decode(data), "manifest")
    manifest = ShareManifest(
        share_id=share_id,
        files=[_parse_entry(v, i) for i, v in enumerate(get_list(top, b"files", "manifest"))],
        meta=[_parse_meta(v, i) for i, v in enumerate(get_list(top, b"meta", "manifest"))],
        extra=extras(top, frozenset((b"files", b"meta"))),
    )
    manifest.warnings = manifest.validate()
    return manifest


def write_manifest(manifest: ShareManifest) -> bytes:
    manifest.validate()
    return bencode.encode({
        **manifest.extra,
        b"files": [e.to_bvalue() for e in manifest.files],
        b"meta": [m.to_bvalue() for m in manifest.meta],
    })


def manifest_filename(share_id: ShareID) -> str:
    return f"{share_id.hex}.db"
