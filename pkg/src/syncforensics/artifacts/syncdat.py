"""``sync.dat``: per-share client configuration.

The file is a bencoded dictionary whose ``folders`` list holds one block per
share.  Each block carries the share path, its secret (Base32 text), the
discovery toggles and the history of peers the share synchronised with.
Keys this module does not model are kept verbatim so a parse/write cycle is
byte-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import bencode
from ..identity import IdentityError, PeerID, Secret, decode_secret, SECRET_LEN
from ._schema import (
    SchemaViolation,
    extras,
    get_bytes,
    get_flag,
    get_int,
    get_list,
    get_text,
    require_dict,
)

FLAG_KEYS = (
    "stopped_by_user",
    "use_dht",
    "use_lan_broadcast",
    "use_relay",
    "use_tracker",
    "use_known_hosts",
)

_BLOCK_KEYS = frozenset(
    k.encode() for k in ("path", "secret", "pub_key", "known_hosts", "peers") + FLAG_KEYS
)
_PEER_KEYS = frozenset((b"id", b"last_sync_completed"))


@dataclass
class PeerHistory:
    id: PeerID
    last_sync_completed: int
    extra: dict = field(default_factory=dict)

    def to_bvalue(self) -> dict:
        return {**self.extra, b"id": self.id.id, b"last_sync_completed": self.last_sync_completed}


@dataclass
class SyncDatConfig:
    path: str
    secret: Secret
    pub_key: bytes | None = None
    stopped_by_user: int = 0
    use_dht: int = 1
    use_lan_broadcast: int = 1
    use_relay: int = 1
    use_tracker: int = 1
    use_known_hosts: int = 0
    known_hosts: list[str] = field(default_factory=list)
    peers: list[PeerHistory] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def flags(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in FLAG_KEYS}

    def record_peer(self, peer_id: PeerID, when: int) -> None:
        for entry in self.peers:
            if entry.id == peer_id:
                entry.last_sync_completed = when
                return
        self.peers.append(PeerHistory(peer_id, when))

    def to_bvalue(self) -> dict:
        for name in FLAG_KEYS:
            if getattr(self, name) not in (0, 1):
                raise SchemaViolation(f"sync.dat: {name} must be 0 or 1")
        block = dict(self.extra)
        block.update({
            b"path": self.path.encode("utf-8"),
            b"secret": self.secret.text.encode("ascii"),
            b"pub_key": self.pub_key or b"",
            b"known_hosts": [h.encode("utf-8") for h in self.known_hosts],
            b"peers": [p.to_bvalue() for p in self.peers],
        })
        block.update({k.encode(): getattr(self, k) for k in FLAG_KEYS})
        return block


@dataclass
class SyncDat:
    """The whole file: every share block plus untouched top-level keys."""

    folders: list[SyncDatConfig] = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def _parse_secret(raw: bytes) -> Secret:
    try:
        if len(raw) == SECRET_LEN:
            return Secret.from_raw(raw)
        return decode_secret(raw.decode("ascii", errors="replace"))
    except IdentityError as exc:
        raise SchemaViolation(f"sync.dat: bad secret: {exc}") from None


def _parse_peer(value, index: int) -> PeerHistory:
    what = f"sync.dat peers[{index}]"
    d = require_dict(value, what)
    raw_id = get_bytes(d, b"id", what)
    if len(raw_id) != 20:
        raise SchemaViolation(f"{what}: id must be 20 bytes, got {len(raw_id)}")
    return PeerHistory(PeerID(raw_id), get_int(d, b"last_sync_completed", what), extras(d, _PEER_KEYS))


def config_from_bvalue(value) -> SyncDatConfig:
    what = "sync.dat share"
    d = require_dict(value, what)
    pub_key = get_bytes(d, b"pub_key", what, b"")
    if pub_key and len(pub_key) != 32:
        raise SchemaViolation(f"{what}: pub_key must be 32 bytes, got {len(pub_key)}")
    known_hosts = []
    for host in get_list(d, b"known_hosts", what, []):
        if not isinstance(host, bytes):
            raise SchemaViolation(f"{what}: known_hosts entries must be byte strings")
        known_hosts.append(host.decode("utf-8", errors="replace"))
    return SyncDatConfig(
        path=get_text(d, b"path", what),
        secret=_parse_secret(get_bytes(d, b"secret", what)),
        pub_key=pub_key or None,
        known_hosts=known_hosts,
        peers=[_parse_peer(p, i) for i, p in enumerate(get_list(d, b"peers", what, []))],
        extra=extras(d, _BLOCK_KEYS),
        **{k: get_flag(d, k.encode(), what, SyncDatConfig.__dataclass_fields__[k].default) for k in FLAG_KEYS},
    )


def parse_sync_dat(data: bytes) -> SyncDatConfig:
    """Parse a single share block."""
    return config_from_bvalue(bencode.decode(data))


def write_sync_dat(config: SyncDatConfig) -> bytes:
    return bencode.encode(config.to_bvalue())


def read_sync_dat(data: bytes) -> SyncDat:
    """Parse a whole ``sync.dat``; a bare share block is accepted too."""
    top = require_dict(bencode.decode(data), "sync.dat")
    if b"folders" not in top and b"secret" in top:
        return SyncDat([config_from_bvalue(top)])
    folders = get_list(top, b"folders", "sync.dat")
    return SyncDat([config_from_bvalue(f) for f in folders], extras(top, frozenset([b"folders"])))


def dump_sync_dat(sync_dat: SyncDat) -> bytes:
    return bencode.encode({**sync_dat.extra, b"folders": [f.to_bvalue() for f in sync_dat.folders]})
