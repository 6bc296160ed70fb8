"""Carve identifiers out of a raw process memory image.

Secrets are found as 53-character windows inside maximal runs of the Base32
alphabet; a window is reported only if it decodes to a valid secret.
Shorter runs that begin like an encoded access byte are kept as fragments.
40-character uppercase hex runs are PeerID/ShareID candidates and dotted
``host:port`` strings are endpoints.  A hex run that directly follows an
endpoint (``host:port <hex>``) is taken to be that remote peer's PeerID.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field

from ..identity import SECRET_TEXT_LEN, AccessLevel, IdentityError, Secret, ShareID, decode_secret, derive_share_id

_RUN = re.compile(rb"[A-Z2-7]{32,}")
_PREFIX = re.compile(rb"I[E-LQ-T]")  # how 'A', 'B' and 'D' access bytes encode
_HEX40 = re.compile(rb"(?<![0-9A-Fa-f])[0-9A-F]{40}(?![0-9A-Fa-f])")
_ENDPOINT = re.compile(rb"(?<![0-9.])(\d{1,3}(?:\.\d{1,3}){3}):(\d{1,5})(?![0-9])")
_PAIR = re.compile(rb"(?<![0-9.])(\d{1,3}(?:\.\d{1,3}){3}:\d{1,5}) ([0-9A-F]{40})(?![0-9A-Fa-f])")


@dataclass(frozen=True)
class SecretCandidate:
    secret: Secret
    offset: int

    @property
    def text(self) -> str:
        return self.secret.text

    @property
    def share_id(self) -> ShareID | None:
        try:
            return derive_share_id(self.secret)
        except IdentityError:
            return None


@dataclass(frozen=True)
class Fragment:
    text: str
    offset: int


@dataclass
class MemoryFindings:
    secrets: list[SecretCandidate] = field(default_factory=list)
    fragments: list[Fragment] = field(default_factory=list)
    hex_ids: list[tuple[str, int]] = field(default_factory=list)
    endpoints: list[tuple[str, int]] = field(default_factory=list)
    contacts: list[tuple[str, str, int]] = field(default_factory=list)  # (endpoint, peer hex, offset)

    @property
    def share_ids(self) -> set[str]:
        return {c.share_id.hex for c in self.secrets if c.share_id is not None}

    @property
    def remote_endpoints(self) -> set[str]:
        return {e for e, _ in self.endpoints if not e.startswith("0.0.0.0:")}

    @property
    def listening_ports(self) -> set[int]:
        return {int(e.rsplit(":", 1)[1]) for e, _ in self.endpoints if e.startswith("0.0.0.0:")}

    @property
    def remote_peer_ids(self) -> set[str]:
        return {peer for _, peer, _ in self.contacts}

    @property
    def local_peer_ids(self) -> set[str]:
        """Hex ids that are neither a derivable ShareID nor a remote contact."""
        paired = {off for _, _, off in self.contacts}
        return {h for h, off in self.hex_ids if off not in paired} - self.share_ids - self.remote_peer_ids

    def to_dict(self) -> dict:
        return {
            "secrets": [{"offset": c.offset, "text": c.text, "access": c.secret.access_level.name,
                         "share_id": c.share_id.hex if c.share_id else None} for c in self.secrets],
            "fragments": [{"offset": f.offset, "text": f.text} for f in self.fragments],
            "hex_ids": [{"offset": o, "hex": h} for h, o in self.hex_ids],
            "endpoints": [{"offset": o, "endpoint": e} for e, o in self.endpoints],
            "contacts": [{"offset": o, "endpoint": e, "peer_id": p} for e, p, o in self.contacts],
        }


def _valid_endpoint(host: bytes, port: bytes) -> bool:
    try:
        ipaddress.IPv4Address(host.decode())
    except ValueError:
        return False
    return 0 < int(port) < 65536


def _non_overlapping(hits: list[SecretCandidate]) -> list[SecretCandidate]:
    """A window shifted into adjacent letters can decode too; overlapping
    windows are alternatives, so keep master/read-only decodes first, then
    the leftmost, and drop whatever overlaps a kept one."""
    kept: list[SecretCandidate] = []
    order = sorted(hits, key=lambda c: (c.secret.access_level == AccessLevel.ENCRYPTED, c.offset))
    for cand in order:
        if all(abs(cand.offset - k.offset) >= SECRET_TEXT_LEN for k in kept):
            kept.append(cand)
    return sorted(kept, key=lambda c: c.offset)


def scan_memory(blob: bytes) -> MemoryFindings:
    found = MemoryFindings()
    for run in _RUN.finditer(blob):
        text, start = run.group(), run.start()
        hits = []
        for i in range(len(text) - SECRET_TEXT_LEN + 1):
            try:
                secret = decode_secret(text[i : i + SECRET_TEXT_LEN].decode("ascii"))
            except IdentityError:
                continue
            hits.append(SecretCandidate(secret, start + i))
        found.secrets.extend(_non_overlapping(hits))
        if not hits and len(text) < SECRET_TEXT_LEN and _PREFIX.match(text):
            found.fragments.append(Fragment(text.decode("ascii"), start))
    for m in _HEX40.finditer(blob):
        found.hex_ids.append((m.group().decode("ascii"), m.start()))
    for m in _ENDPOINT.finditer(blob):
        if _valid_endpoint(m.group(1), m.group(2)):
            found.endpoints.append((m.group().decode("ascii"), m.start()))
    for m in _PAIR.finditer(blob):
        host, port = m.group(1).rsplit(b":", 1)
        if _valid_endpoint(host, port):
            found.contacts.append((m.group(1).decode("ascii"), m.group(2).decode("ascii"), m.start(2)))
    return found
