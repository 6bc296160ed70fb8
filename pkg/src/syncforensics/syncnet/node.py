"""A simulated synchronisation client: local share state plus the server side
of the wire protocol.

Nodes holding the master secret originate changes.  A read-only node cannot
propagate local edits, so deleting or modifying a file there freezes the
manifest entry with ``invalidated=1`` and keeps ``hash20`` pointing at the
last valid version.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .. import integrity
from ..artifacts import (
    STATE_DELETED,
    STATE_PRESENT,
    FileEntry,
    FileMeta,
    LogEvent,
    LogEventKind,
    OSProfile,
    Settings,
    ShareManifest,
    SyncDatConfig,
)
from ..artifacts.manifest import write_manifest
from ..identity import AccessLevel, PeerID, Secret, ShareID, as_readonly, derive_share_id
from .discovery import CheckinRegistry
from .errors import UnknownFile
from .messages import MessageKind, make

if TYPE_CHECKING:
    from .network import Network

logger = logging.getLogger(__name__)

NONCE_LEN = 16
TOKEN_LEN = 16


@dataclass
class Byzantine:
    """Corrupt outgoing pieces: only ``pieces`` (all when None), at most
    ``max_corruptions`` times (unbounded when None)."""

    pieces: frozenset[int] | None = None
    max_corruptions: int | None = None
    corrupted: int = 0

    def should_corrupt(self, index: int) -> bool:
        if self.pieces is not None and index not in self.pieces:
            return False
        if self.max_corruptions is not None and self.corrupted >= self.max_corruptions:
            return False
        self.corrupted += 1
        return True


@dataclass
class ShareState:
    name: str
    secret: Secret
    config: SyncDatConfig
    manifest: ShareManifest
    content: dict[str, bytes] = field(default_factory=dict)
    absent_pieces: dict[str, frozenset[int]] = field(default_factory=dict)
    archive: dict[str, tuple[bytes, int]] = field(default_factory=dict)

    @property
    def share_id(self) -> ShareID:
        return derive_share_id(self.secret)

    @property
    def is_master(self) -> bool:
        return self.secret.access_level == AccessLevel.MASTER

    def holds_piece(self, path: str, index: int) -> bool:
        return path in self.content and index not in self.absent_pieces.get(path, frozenset())


@dataclass
class Session:
    share: ShareID
    scope: str
    client_peer: PeerID | None
    client_address: str
    uploaded: set = field(default_factory=set)


class SyncNode:
    def __init__(
        self,
        name: str,
        address: str,
        peer_id: PeerID,
        lan_domain: str = "",
        settings: Settings | None = None,
        os_profile: OSProfile = OSProfile.LINUX,
        seed: int | str = 0,
        dht_node: bool = True,
        auto_checkin: bool = True,
        byzantine: Byzantine | None = None,
    ):
        self.name = name
        self.address = address
        self.peer_id = peer_id
        self.lan_domain = lan_domain
        self.settings = settings or Settings()
        self.os_profile = OSProfile(os_profile)
        self.rng = random.Random(f"node:{seed}:{name}")
        self.dht_node = dht_node
        self.auto_checkin = auto_checkin
        self.byzantine = byzantine
        self.online = True
        self.shares: dict[ShareID, ShareState] = {}
        self.log: list[LogEvent] = []
        self.dht: CheckinRegistry | None = None
        self.sessions: dict[bytes, Session] = {}
        self.nonces: dict[tuple[str, ShareID], bytes] = {}
        self.contacts: dict[str, PeerID | None] = {}

    def __repr__(self) -> str:
        return f"SyncNode({self.name!r}, {self.address}, {'online' if self.online else 'offline'})"

    # -- local state -----------------------------------------------------

    def add_share(self, name: str, secret: Secret, config: SyncDatConfig | None = None) -> ShareState:
        share_id = derive_share_id(secret)
        config = config or SyncDatConfig(path=name, secret=secret)
        state = ShareState(name, secret, config, ShareManifest(share_id=share_id))
        self.shares[share_id] = state
        return state

    def share(self, share: ShareID) -> ShareState:
        try:
            return self.shares[share]
        except KeyError:
            from .errors import UnknownShare

            raise UnknownShare(f"{self.name} does not hold share {share.hex}") from None

    def _epoch(self, net: "Network") -> int:
        return net.epoch_seconds()

    def _log(self, net: "Network", kind: LogEventKind, **fields) -> None:
        self.log.append(LogEvent(self._epoch(net), kind, **fields))

    def add_file(self, net: "Network", share: ShareID, path: str, content: bytes,
                 absent_pieces=(), mtime: int | None = None, author: PeerID | None = None) -> FileEntry:
        """Place a file in the share as if it had always been there."""
        state = self.share(share)
        index = integrity.index_file(content, self.settings.piece_len)
        entry = FileEntry(
            path=path,
            size=len(content),
            mtime=self._epoch(net) if mtime is None else mtime,
            hash20=index.whole_file_hash,
            peer=author or self.peer_id,
        )
        state.manifest.put(entry, FileMeta.from_index(path, index))
        state.content[path] = content
        if absent_pieces:
            state.absent_pieces[path] = frozenset(absent_pieces)
        return entry

    def _existing(self, state: ShareState, path: str) -> FileEntry:
        entry = state.manifest.entry(path)
        if entry is None or entry.state != STATE_PRESENT or path not in state.content and not entry.invalidated:
            raise UnknownFile(f"{self.name}: no file {path!r} in share {state.name}")
        return entry

    def _to_archive(self, net: "Network", state: ShareState, path: str) -> None:
        content = state.content.pop(path, None)
        state.absent_pieces.pop(path, None)
        if content is not None and self.settings.sync_archive_enabled:
            state.archive[path] = (content, net.clock.now + self.settings.archive_ms)

    def delete_file(self, net: "Network", share: ShareID, path: str, secure: bool = False) -> FileEntry:
        state = self.share(share)
        entry = self._existing(state, path)
        self._to_archive(net, state, path)
        if secure:
            state.archive.pop(path, None)
        now = self._epoch(net)
        self._log(net, LogEventKind.DELETE, path=path, share=share)
        if state.is_master:
            entry.state = STATE_DELETED
            entry.mtime = now
            entry.peer = self.peer_id
            state.manifest.put(entry, None)
        else:
            entry.invalidated = 1
            entry.mtime = now
            entry.peer = self.peer_id
            self._log(net, LogEventKind.INVALIDATE, path=path, share=share)
        return entry

    def secure_delete(self, net: "Network", share: ShareID, path: str) -> FileEntry:
        return self.delete_file(net, share, path, secure=True)

    def modify_offline(self, net: "Network", share: ShareID, path: str, new_content: bytes) -> FileEntry:
        state = self.share(share)
        entry = self._existing(state, path)
        state.content[path] = new_content
        state.absent_pieces.pop(path, None)
        now = self._epoch(net)
        if state.is_master:
            index = integrity.index_file(new_content, self.settings.piece_len)
            entry.size = len(new_content)
            entry.hash20 = index.whole_file_hash
            entry.mtime = now
            entry.peer = self.peer_id
            state.manifest.put(entry, FileMeta.from_index(path, index))
        else:
            # the manifest keeps describing the last valid version
            entry.invalidated = 1
            entry.mtime = now
            entry.peer = self.peer_id
            self._log(net, LogEventKind.INVALIDATE, path=path, share=share)
        return entry

    def archived(self, share: ShareID, path: str, now_ms: int) -> bytes | None:
        item = self.share(share).archive.get(path)
        if item is None or now_ms > item[1]:
            return None
        return item[0]

    def purge_archive(self, now_ms: int) -> None:
        for state in self.shares.values():
            state.archive = {p: v for p, v in state.archive.items() if now_ms <= v[1]}

    def install(self, net: "Network", share: ShareID, entry: FileEntry, meta: FileMeta, content: bytes) -> None:
        state = self.share(share)
        state.manifest.put(entry, meta)
        state.content[entry.path] = content
        state.absent_pieces.pop(entry.path, None)

    def apply_remote_delete(self, net: "Network", share: ShareID, tombstone: FileEntry) -> None:
        state = self.share(share)
        self._to_archive(net, state, tombstone.path)
        state.manifest.put(tombstone, None)
        self._log(net, LogEventKind.DELETE, path=tombstone.path, peer_id=tombstone.peer, share=share)

    def manifest_bytes(self, share: ShareID) -> bytes:
        return write_manifest(self.share(share).manifest)

    # -- server side -----------------------------------------------------

    def handle(self, net: "Network", src: str, msg: dict) -> None:
        if not self.online:
            return
        kind = MessageKind(msg[b"m"].decode())
        handler = getattr(self, f"_on_{kind.value.lower()}", None)
        if handler is None or msg.get(b"r"):
            return
        handler(net, src, msg)

    def _reply(self, net: "Network", src: str, request: dict, kind: MessageKind, share: bytes | None, **fields):
        reply = make(kind, share, **fields)
        reply[b"t"] = request.get(b"t", b"")
        reply[b"r"] = 1
        net.send(self.address, src, reply)

    def _error(self, net: "Network", src: str, request: dict, code: str, detail: str = "") -> None:
        self._reply(net, src, request, MessageKind.ERROR, request.get(b"share", b""),
                    code=code.encode(), detail=detail.encode())

    def _on_hello(self, net, src, msg):
        peer = msg.get(b"peer")
        client = PeerID(peer) if isinstance(peer, bytes) and len(peer) == 20 else None
        self.contacts[src] = client
        self._log(net, LogEventKind.PEER_CONNECT, peer_id=client, host=src)
        self._reply(net, src, msg, MessageKind.HELLO, None, peer=self.peer_id.id)

    def _held(self, msg) -> ShareState | None:
        try:
            return self.shares.get(ShareID(msg[b"share"]))
        except (KeyError, ValueError):
            return None

    def _on_challenge(self, net, src, msg):
        state = self._held(msg)
        if state is None:
            return self._error(net, src, msg, "UnknownShare")
        nonce = self.rng.randbytes(NONCE_LEN)
        self.nonces[(src, state.share_id)] = nonce
        self._reply(net, src, msg, MessageKind.CHALLENGE, state.share_id.id, nonce=nonce)

    def _on_auth(self, net, src, msg):
        state = self._held(msg)
        if state is None:
            return self._error(net, src, msg, "UnknownShare")
        nonce = self.nonces.pop((src, state.share_id), None)
        proof = msg.get(b"proof")
        if nonce is None or not isinstance(proof, bytes):
            return self._error(net, src, msg, "AuthFailed", "no outstanding challenge")
        candidates = [("download", as_readonly(state.secret))]
        if state.is_master:
            candidates.insert(0, ("bidirectional", state.secret))
        for scope, secret in candidates:
            if hashlib.sha1(nonce + secret.raw).digest() == proof:
                token = self.rng.randbytes(TOKEN_LEN)
                self.sessions[token] = Session(state.share_id, scope, self.contacts.get(src), src)
                return self._reply(net, src, msg, MessageKind.AUTH, state.share_id.id, token=token,
                                   scope=scope.encode(), level=int(state.secret.access_level))
        self._error(net, src, msg, "AuthFailed", "proof does not match")

    def _session(self, net, src, msg) -> tuple[Session, ShareState] | None:
        token = msg.get(b"token")
        session = self.sessions.get(token) if isinstance(token, bytes) else None
        state = self._held(msg)
        if session is None or state is None or session.share != state.share_id or session.client_address != src:
            self._error(net, src, msg, "BadToken")
            return None
        return session, state

    def _on_manifest_request(self, net, src, msg):
        found = self._session(net, src, msg)
        if found is None:
            return
        _, state = found
        from .. import bencode

        body = bencode.decode(write_manifest(state.manifest))
        self._reply(net, src, msg, MessageKind.MANIFEST_RESPONSE, state.share_id.id, manifest=body)

    def _on_piece_request(self, net, src, msg):
        found = self._session(net, src, msg)
        if found is None:
            return
        session, state = found
        try:
            path = msg[b"path"].decode("utf-8")
            index = msg[b"index"]
            if not isinstance(index, int):
                raise TypeError
        except (KeyError, AttributeError, UnicodeDecodeError, TypeError):
            return self._error(net, src, msg, "ProtocolError", "bad piece request")
        entry = state.manifest.entry(path)
        meta = state.manifest.meta_for(path)
        if entry is None:
            return self._error(net, src, msg, "UnknownFile", path)
        if not entry.is_live or meta is None or not 0 <= index < meta.piece_count or not state.holds_piece(path, index):
            return self._error(net, src, msg, "PieceUnavailable", f"{path}#{index}")
        start = index * meta.piece_len
        piece = state.content[path][start : start + meta.piece_len]
        if self.byzantine is not None and self.byzantine.should_corrupt(index):
            piece = bytes([piece[0] ^ 0xFF]) + piece[1:] if piece else b"\x00"
        if path not in session.uploaded:
            session.uploaded.add(path)
            self._log(net, LogEventKind.UPLOAD, peer_id=session.client_peer, host=src, path=path,
                      share=state.share_id)
        self._reply(net, src, msg, MessageKind.PIECE_RESPONSE, state.share_id.id, path=path.encode(),
                    index=index, data=piece)

    def _on_multicast_ping(self, net, src, msg):
        state = self._held(msg)
        if state is None or src == self.address:
            return
        self._reply(net, src, msg, MessageKind.MULTICAST_PING, state.share_id.id, peer=self.peer_id.id,
                    addr=self.address.encode())

    def _on_dht_announce(self, net, src, msg):
        if self.dht is None:
            return
        peer, addr = msg.get(b"peer"), msg.get(b"addr")
        if not (isinstance(peer, bytes) and len(peer) == 20 and isinstance(addr, bytes)):
            return self._error(net, src, msg, "ProtocolError", "bad announce")
        share = ShareID(msg[b"share"]) if len(msg[b"share"]) == 20 else None
        if share is None:
            return self._error(net, src, msg, "ProtocolError", "bad share")
        self.dht.register(share, PeerID(peer), addr.decode(), net.clock.now)
        self._reply(net, src, msg, MessageKind.DHT_ANNOUNCE, share.id)

    def _on_dht_get_peers(self, net, src, msg):
        if self.dht is None or len(msg[b"share"]) != 20:
            return
        share = ShareID(msg[b"share"])
        peers = [
            {b"id": r.peer_id.id, b"addr": r.address.encode(), b"seen": r.last_checkin}
            for r in self.dht.live(share, net.clock.now)
        ]
        self._reply(net, src, msg, MessageKind.DHT_PEERS, share.id, peers=peers)
