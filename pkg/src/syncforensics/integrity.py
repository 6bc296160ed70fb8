"""Piece-wise hashing and verification.

A file is cut into fixed-length pieces (32 KiB by default).  Each piece is
SHA1-hashed, and the per-file ``hash`` is SHA1 over the in-order
concatenation of the piece hashes.  A zero-byte file has no pieces and its
aggregate is SHA1 of the empty string.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence, Union

if TYPE_CHECKING:
    from .artifacts.manifest import FileMeta

DEFAULT_PIECE_LEN = 32768
HASH_LEN = 20


class IntegrityError(ValueError):
    pass


class ZeroPieceLength(IntegrityError):
    pass


class HashLengthError(IntegrityError):
    pass


class IndexOutOfRange(IntegrityError):
    pass


class WrongPieceLength(IntegrityError):
    pass


def sha1(data: bytes) -> bytes:
    return hashlib.sha1(data).digest()


def hexdigest(digest: bytes | None) -> str | None:
    return None if digest is None else digest.hex().upper()


def piece_count(size: int, piece_len: int) -> int:
    if piece_len <= 0:
        raise ZeroPieceLength(f"piece length must be positive, got {piece_len}")
    return -(-size // piece_len)


def piece_length(size: int, piece_len: int, index: int) -> int:
    n = piece_count(size, piece_len)
    if not 0 <= index < n:
        raise IndexOutOfRange(f"piece {index} not in [0, {n})")
    if index == n - 1:
        return size - (n - 1) * piece_len
    return piece_len


def split_pieces(content: bytes, piece_len: int) -> list[bytes]:
    n = piece_count(len(content), piece_len)
    return [content[i * piece_len : (i + 1) * piece_len] for i in range(n)]


def aggregate_hash(piece_hashes: Iterable[bytes]) -> bytes:
    h = hashlib.sha1()
    for i, ph in enumerate(piece_hashes):
        if len(ph) != HASH_LEN:
            raise HashLengthError(f"piece hash {i} is {len(ph)} bytes, expected {HASH_LEN}")
        h.update(ph)
    return h.digest()


@dataclass(frozen=True)
class FileIndex:
    size: int
    piece_len: int
    piece_hashes: tuple[bytes, ...]
    aggregate_hash: bytes
    whole_file_hash: bytes

    @property
    def pieces_blob(self) -> bytes:
        return b"".join(self.piece_hashes)


def index_file(content: bytes, piece_len: int = DEFAULT_PIECE_LEN) -> FileIndex:
    pieces = split_pieces(content, piece_len)
    hashes = tuple(sha1(p) for p in pieces)
    return FileIndex(
        size=len(content),
        piece_len=piece_len,
        piece_hashes=hashes,
        aggregate_hash=aggregate_hash(hashes),
        whole_file_hash=sha1(content),
    )


def verify_piece(piece: bytes, index: int, meta: "FileMeta") -> bool:
    expected_len = piece_length(meta.size, meta.piece_len, index)
    if index >= len(meta.piece_hashes):
        raise IndexOutOfRange(f"piece {index} not in manifest of {len(meta.piece_hashes)} pieces")
    if len(piece) != expected_len:
        raise WrongPieceLength(f"piece {index} is {len(piece)} bytes, expected {expected_len}")
    return sha1(piece) == meta.piece_hashes[index]


class Status(str, enum.Enum):
    FULL_MATCH = "FULL_MATCH"
    PARTIAL = "PARTIAL"
    MISMATCH = "MISMATCH"


@dataclass(frozen=True)
class VerificationResult:
    status: Status
    verified_pieces: frozenset[int]
    failed_pieces: frozenset[int]
    missing_pieces: frozenset[int]
    aggregate_ok: bool = False
    whole_file_ok: bool | None = None

    @property
    def piece_total(self) -> int:
        return len(self.verified_pieces) + len(self.failed_pieces) + len(self.missing_pieces)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "verified": sorted(self.verified_pieces),
            "failed": sorted(self.failed_pieces),
            "missing": sorted(self.missing_pieces),
            "aggregate_ok": self.aggregate_ok,
            "whole_file_ok": self.whole_file_ok,
        }


PieceSource = Union[bytes, Mapping[int, bytes], Sequence]


def verify_file(
    content_or_pieces: PieceSource,
    meta: "FileMeta",
    whole_file_hash: bytes | None = None,
) -> VerificationResult:
    """Classify a full or partial copy of a file against its manifest meta.

    ``content_or_pieces`` is either the complete byte content or a mapping of
    piece index to piece bytes (absent indices are missing).  When
    ``whole_file_hash`` is given, a complete copy must also match it.

    FULL_MATCH needs every piece verified plus a matching aggregate.
    MISMATCH means nothing is missing yet the copy is wrong: no piece
    verified, or every piece verified but the aggregate/whole hash disagrees.
    Anything else with a gap or a failed piece is PARTIAL.
    """
    n = piece_count(meta.size, meta.piece_len)
    if isinstance(content_or_pieces, (bytes, bytearray, memoryview)):
        content = bytes(content_or_pieces)
        if len(content) != meta.size:
            # a copy of the wrong size cannot be aligned to any piece
            return VerificationResult(Status.MISMATCH, frozenset(), frozenset(range(n)), frozenset(),
                                      whole_file_ok=None if whole_file_hash is None else False)
        pieces = dict(enumerate(split_pieces(content, meta.piece_len)))
    elif isinstance(content_or_pieces, Mapping):
        pieces = dict(content_or_pieces)
    else:
        pieces = {i: p for i, p in enumerate(content_or_pieces) if p is not None}

    verified, failed, missing = set(), set(), set()
    for i in range(n):
        piece = pieces.get(i)
        if piece is None:
            missing.add(i)
            continue
        try:
            ok = verify_piece(piece, i, meta)
        except (WrongPieceLength, IndexOutOfRange):
            ok = False
        (verified if ok else failed).add(i)

    aggregate_ok = False
    whole_ok = None
    if not missing and not failed:
        aggregate_ok = aggregate_hash(meta.piece_hashes) == meta.aggregate_hash
        if whole_file_hash is not None:
            whole_ok = sha1(b"".join(pieces[i] for i in range(n))) == whole_file_hash

    if not missing and not failed and aggregate_ok and whole_ok is not False:
        status = Status.FULL_MATCH
    elif not missing and (not verified or not failed):
        status = Status.MISMATCH
    else:
        status = Status.PARTIAL
    return VerificationResult(status, frozenset(verified), frozenset(failed), frozenset(missing),
                              aggregate_ok, whole_ok)
