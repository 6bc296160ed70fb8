"""Secrets, ShareIDs and PeerIDs.

A secret is 33 bytes: one access-level byte followed by a 32-byte payload.
Humans see it as 53 characters of unpadded RFC 4648 Base32.  The read-only
secret is a one-way function of the master secret, and the ShareID is the
SHA1 of the raw read-only secret, so both access levels of one share meet on
the same discovery key.
"""

from __future__ import annotations

import base64
import enum
import hashlib
import random
import re
from dataclasses import dataclass
from typing import Union

SECRET_LEN = 33
PAYLOAD_LEN = 32
SECRET_TEXT_LEN = 53
ID_LEN = 20

READONLY_DOMAIN = b"\x52"

B32_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567"
_B32_RE = re.compile(r"[A-Z2-7]*")

Entropy = Union[random.Random, int]


class IdentityError(ValueError):
    pass


class InvalidLevel(IdentityError):
    pass


class UnsupportedLevel(IdentityError):
    pass


class BadLength(IdentityError):
    pass


class BadAlphabet(IdentityError):
    pass


class UnknownAccessByte(IdentityError):
    pass


class AccessLevel(enum.IntEnum):
    MASTER = 0x41
    READ_ONLY = 0x42
    ENCRYPTED = 0x44


def _rng(entropy: Entropy) -> random.Random:
    if isinstance(entropy, random.Random):
        return entropy
    return random.Random(entropy)


@dataclass(frozen=True)
class Secret:
    access_level: AccessLevel
    payload: bytes

    def __post_init__(self):
        if len(self.payload) != PAYLOAD_LEN:
            raise BadLength(f"secret payload must be {PAYLOAD_LEN} bytes, got {len(self.payload)}")

    @property
    def raw(self) -> bytes:
        return bytes([self.access_level]) + self.payload

    @classmethod
    def from_raw(cls, raw: bytes) -> "Secret":
        if len(raw) != SECRET_LEN:
            raise BadLength(f"secret must be {SECRET_LEN} bytes, got {len(raw)}")
        try:
            level = AccessLevel(raw[0])
        except ValueError:
            raise UnknownAccessByte(f"unknown access byte 0x{raw[0]:02X}") from None
        return cls(level, bytes(raw[1:]))

    @property
    def text(self) -> str:
        return encode_secret(self)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"Secret({self.access_level.name}, {self.text[:8]}...)"


@dataclass(frozen=True, order=True)
class _Id20:
    id: bytes

    def __post_init__(self):
        if len(self.id) != ID_LEN:
            raise BadLength(f"{type(self).__name__} must be {ID_LEN} bytes, got {len(self.id)}")

    @property
    def hex(self) -> str:
        return self.id.hex().upper()

    @classmethod
    def from_hex(cls, text: str):
        try:
            raw = bytes.fromhex(text)
        except ValueError:
            raise BadAlphabet(f"not hexadecimal: {text!r}") from None
        return cls(raw)

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.hex})"


class ShareID(_Id20):
    pass


class PeerID(_Id20):
    pass


def generate_secret(level: AccessLevel, entropy: Entropy) -> Secret:
    if level != AccessLevel.MASTER:
        raise InvalidLevel(f"only master secrets are generated; {level.name} is derived")
    return Secret(AccessLevel.MASTER, _rng(entropy).randbytes(PAYLOAD_LEN))


def derive_readonly(master: Secret) -> Secret:
    if master.access_level != AccessLevel.MASTER:
        raise InvalidLevel(f"read-only secrets derive from master, not {master.access_level.name}")
    payload = hashlib.sha256(READONLY_DOMAIN + master.payload).digest()
    return Secret(AccessLevel.READ_ONLY, payload)


def as_readonly(secret: Secret) -> Secret:
    """The read-only form of a master or read-only secret."""
    if secret.access_level == AccessLevel.MASTER:
        return derive_readonly(secret)
    if secret.access_level == AccessLevel.READ_ONLY:
        return secret
    raise UnsupportedLevel("encrypted secrets are not supported")


def derive_share_id(secret: Secret) -> ShareID:
    return ShareID(hashlib.sha1(as_readonly(secret).raw).digest())


def encode_secret(secret: Secret) -> str:
    return base64.b32encode(secret.raw).decode("ascii").rstrip("=")


def decode_secret(text: str) -> Secret:
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    if len(text) != SECRET_TEXT_LEN:
        raise BadLength(f"secret text must be {SECRET_TEXT_LEN} characters, got {len(text)}")
    if not _B32_RE.fullmatch(text):
        bad = sorted({c for c in text if c not in B32_ALPHABET})
        raise BadAlphabet(f"characters outside Base32 alphabet: {''.join(bad)!r}")
    # 53 chars carry 265 bits for 264 bits of data; the spare bit must be zero.
    if B32_ALPHABET.index(text[-1]) & 1:
        raise BadAlphabet("non-canonical trailing bits")
    raw = base64.b32decode(text + "===")
    return Secret.from_raw(raw)


def generate_peer_id(entropy: Entropy) -> PeerID:
    return PeerID(_rng(entropy).randbytes(ID_LEN))
