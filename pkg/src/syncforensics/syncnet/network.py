"""The simulated network: routing, the tracker service, multicast domains,
the single-hop DHT, and the client half of every protocol exchange.

Client operations are synchronous from the caller's point of view: they send
a request and drive the scheduler until the reply (or a timeout) arrives.
Handlers running inside the scheduler only ever send, never wait.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import random
from dataclasses import dataclass, field, replace

from .. import bencode, integrity
from ..artifacts import FileEntry, FileMeta, LogEventKind, ShareManifest, parse_manifest
from ..artifacts.manifest import STATE_DELETED
from ..identity import PeerID, Secret, ShareID, as_readonly
from .clock import SimClock
from .discovery import DHT_K, NoReachableStorageNodes, PeerRecord, TrackerState, merge_records, xor_closest
from .errors import BY_CODE, NodeOffline, NoPeersFound, PeerUnreachable, ProtocolError, SyncNetError
from .messages import MalformedMessage, MessageKind, kind_of, make, pack, unpack
from .node import SyncNode
from .transport import MemoryTransport

logger = logging.getLogger(__name__)

DEFAULT_EPOCH = 1_400_000_000
TRACKER_ADDRESS = "t.usyncapp.com:3000"
MULTICAST_GROUP = "239.192.0.0:3838"
REQUEST_TIMEOUT_MS = 2000


@dataclass(frozen=True)
class TraceEntry:
    """One datagram as an observer on the wire would summarise it."""

    t: int
    src: str
    dst: str
    kind: str
    share: str | None = None
    peer: str | None = None

    def to_dict(self) -> dict:
        return {"t": self.t, "src": self.src, "dst": self.dst, "kind": self.kind,
                "share": self.share, "peer": self.peer}


@dataclass(frozen=True)
class Handshake:
    address: str
    share: ShareID
    token: bytes
    scope: str
    server_peer: PeerID | None
    server_level: int | None = None


@dataclass
class SyncReport:
    node: str
    share: ShareID
    peers_found: list[PeerRecord] = field(default_factory=list)
    peers_synced: list[str] = field(default_factory=list)
    downloaded: list[str] = field(default_factory=list)
    deleted: list[str] = field(default_factory=list)
    incomplete: dict[str, list[int]] = field(default_factory=dict)
    pieces_transferred: int = 0
    failed_pieces: int = 0
    errors: list[str] = field(default_factory=list)

    @property
    def no_peers(self) -> bool:
        return not self.peers_found


def _hex(value) -> str | None:
    if isinstance(value, bytes) and len(value) == 20:
        return value.hex().upper()
    return None


class Network:
    def __init__(
        self,
        seed: int | str = 0,
        latency_ms: tuple[int, int] = (5, 40),
        epoch: int = DEFAULT_EPOCH,
        ttl_ms: int = 30 * 60_000,
        tracker_address: str = TRACKER_ADDRESS,
        transport=None,
    ):
        lo, hi = latency_ms
        if not 0 <= lo <= hi:
            raise ValueError(f"bad latency range {latency_ms!r}")
        self.seed = seed
        self.latency_ms = (lo, hi)
        self.epoch = epoch
        self.ttl_ms = ttl_ms
        self.clock = SimClock()
        self.rng = random.Random(f"net:{seed}")
        self.transport = transport or MemoryTransport()
        self.transport.attach(self.clock, self._deliver)
        self.tracker_address = tracker_address
        self.tracker = TrackerState(ttl_ms)
        self.nodes: dict[str, SyncNode] = {}
        self.trace: list[TraceEntry] = []
        self._tids = itertools.count(1)
        self._waiting: dict[tuple[str, bytes], list[dict]] = {}
        self.transport.bind(tracker_address)

    # -- membership ------------------------------------------------------

    def add_node(self, node: SyncNode) -> SyncNode:
        if node.address in self.nodes or node.address in (self.tracker_address, MULTICAST_GROUP):
            raise ValueError(f"address {node.address} already in use")
        if any(n.name == node.name for n in self.nodes.values()):
            raise ValueError(f"node name {node.name!r} already in use")
        self.nodes[node.address] = node
        self.transport.bind(node.address)
        if node.dht_node:
            from .discovery import CheckinRegistry

            node.dht = CheckinRegistry(self.ttl_ms)
        if node.auto_checkin:
            self.clock.schedule(0, self._periodic_checkin, node, label=f"checkin {node.name}")
        return node

    def node(self, name_or_address: str) -> SyncNode:
        if name_or_address in self.nodes:
            return self.nodes[name_or_address]
        for node in self.nodes.values():
            if node.name == name_or_address:
                return node
        raise KeyError(name_or_address)

    def set_online(self, node: SyncNode, online: bool) -> None:
        was = node.online
        node.online = online
        if online and not was:
            node.sessions.clear()
            node.nonces.clear()
            self.checkin(node)

    def epoch_seconds(self) -> int:
        return self.epoch + self.clock.now // 1000

    def close(self) -> None:
        self.transport.close()

    # -- datagrams -------------------------------------------------------

    def _latency(self) -> int:
        lo, hi = self.latency_ms
        return self.rng.randint(lo, hi)

    def send(self, src: str, dst: str, msg: dict) -> None:
        data = pack(msg)
        self.trace.append(TraceEntry(self.clock.now, src, dst, msg[b"m"].decode(),
                                     _hex(msg.get(b"share")), _hex(msg.get(b"peer"))))
        if dst == MULTICAST_GROUP:
            sender = self.nodes.get(src)
            for node in self.nodes.values():
                if node.address != src and sender is not None and node.lan_domain == sender.lan_domain \
                        and node.online:
                    self.transport.send(src, node.address, data, self._latency())
            return
        self.transport.send(src, dst, data, self._latency())

    def _deliver(self, src: str, dst: str, data: bytes) -> None:
        try:
            msg = unpack(data)
        except MalformedMessage as exc:
            logger.debug("dropping malformed datagram %s->%s: %s", src, dst, exc)
            return
        if msg.get(b"r"):
            key = (dst, msg.get(b"t", b""))
            if key in self._waiting:
                self._waiting[key].append(msg)
            return
        if dst == self.tracker_address:
            self._tracker_handle(src, msg)
            return
        node = self.nodes.get(dst)
        if node is not None and node.online:
            node.handle(self, src, msg)

    def _tracker_handle(self, src: str, msg: dict) -> None:
        if kind_of(msg) is not MessageKind.TRACKER_ANNOUNCE or len(msg[b"share"]) != 20:
            return
        peer = msg.get(b"peer")
        record = PeerRecord(src, PeerID(peer) if isinstance(peer, bytes) and len(peer) == 20 else None)
        found = self.tracker.announce(ShareID(msg[b"share"]), record, self.clock.now,
                                      register=bool(msg.get(b"reg", 1)))
        reply = make(MessageKind.TRACKER_RESPONSE, msg[b"share"],
                     peers=[{b"id": r.peer_id.id, b"addr": r.address.encode(), b"seen": r.last_seen}
                            for r in found])
        reply[b"t"] = msg.get(b"t", b"")
        reply[b"r"] = 1
        self.send(self.tracker_address, src, reply)

    def _tid(self) -> bytes:
        return str(next(self._tids)).encode()

    def _drive(self, deadline: int, done) -> None:
        if self.transport.synchronous:
            self.clock.run_until(deadline, stop=done)
            return
        while not done() and self.clock.now < deadline:
            self.transport.pump(min(50, deadline - self.clock.now))
            self.clock.run_until(self.clock.now, stop=done)

    def request(self, src: str, dst: str, msg: dict, timeout_ms: int = REQUEST_TIMEOUT_MS,
                collect: bool = False) -> list[dict] | dict:
        """Send ``msg`` and wait for the reply; with ``collect`` gather every
        reply that arrives before the timeout instead of the first one."""
        sender = self.nodes.get(src)
        if sender is not None and not sender.online:
            raise NodeOffline(f"{sender.name} is offline")
        tid = self._tid()
        msg[b"t"] = tid
        key = (src, tid)
        self._waiting[key] = []
        try:
            self.send(src, dst, msg)
            deadline = self.clock.now + timeout_ms
            if collect:
                self._drive(deadline, lambda: False)
                return list(self._waiting[key])
            self._drive(deadline, lambda: bool(self._waiting[key]))
            replies = self._waiting[key]
        finally:
            del self._waiting[key]
        if not replies:
            raise PeerUnreachable(f"no reply from {dst} to {msg[b'm'].decode()}")
        reply = replies[0]
        if kind_of(reply) is MessageKind.ERROR:
            code = reply.get(b"code", b"").decode(errors="replace")
            detail = reply.get(b"detail", b"").decode(errors="replace")
            raise BY_CODE.get(code, SyncNetError)(f"{dst}: {code} {detail}".strip())
        return reply

    def fire(self, src: str, dst: str, msg: dict) -> None:
        """Send without waiting; any reply is discarded."""
        msg[b"t"] = self._tid()
        self.send(src, dst, msg)

    # -- discovery -------------------------------------------------------

    def _record(self, node: SyncNode) -> PeerRecord:
        return PeerRecord(node.address, node.peer_id)

    def tracker_announce(self, node: SyncNode, share: ShareID, register: bool = True) -> list[PeerRecord]:
        msg = make(MessageKind.TRACKER_ANNOUNCE, share.id, peer=node.peer_id.id, addr=node.address.encode(),
                   reg=int(register))
        reply = self.request(node.address, self.tracker_address, msg)
        return [r for r in self._peer_list(reply, "tracker") if r.peer_id != node.peer_id]

    def _peer_list(self, reply: dict, source: str) -> list[PeerRecord]:
        records = []
        for item in reply.get(b"peers", []):
            try:
                peer, addr, seen = item[b"id"], item[b"addr"].decode(), item.get(b"seen")
                records.append(PeerRecord(addr, PeerID(peer), seen if isinstance(seen, int) else None, (source,)))
            except (KeyError, TypeError, AttributeError, ValueError, UnicodeDecodeError):
                raise ProtocolError(f"malformed peer list entry {item!r}") from None
        return records

    def dht_storage_nodes(self, share: ShareID) -> list[SyncNode]:
        """The K online DHT nodes XOR-closest to ``share`` (global routing snapshot)."""
        candidates = [n for n in self.nodes.values() if n.dht is not None and n.online]
        if not candidates:
            raise NoReachableStorageNodes(f"no online DHT node can store {share.hex}")
        return xor_closest(share.id, candidates, DHT_K, id_of=lambda n: n.peer_id.id)

    def dht_announce(self, node: SyncNode, share: ShareID) -> list[SyncNode]:
        if not node.online:
            raise NodeOffline(f"{node.name} is offline")
        stored = []
        for target in self.dht_storage_nodes(share):
            msg = make(MessageKind.DHT_ANNOUNCE, share.id, peer=node.peer_id.id, addr=node.address.encode())
            try:
                self.request(node.address, target.address, msg)
                stored.append(target)
            except PeerUnreachable:
                continue
        if not stored:
            raise NoReachableStorageNodes(f"no storage node acknowledged {share.hex}")
        return stored

    def dht_get_peers(self, node: SyncNode, share: ShareID) -> list[PeerRecord]:
        if not node.online:
            raise NodeOffline(f"{node.name} is offline")
        found = []
        for target in self.dht_storage_nodes(share):
            try:
                reply = self.request(node.address, target.address, make(MessageKind.DHT_GET_PEERS, share.id))
            except PeerUnreachable:
                continue
            found.extend(r for r in self._peer_list(reply, "dht") if r.peer_id != node.peer_id)
        return merge_records(found)

    def multicast_ping(self, node: SyncNode, share: ShareID) -> list[PeerRecord]:
        if not node.online:
            raise NodeOffline(f"{node.name} is offline")
        msg = make(MessageKind.MULTICAST_PING, share.id, peer=node.peer_id.id, addr=node.address.encode())
        replies = self.request(node.address, MULTICAST_GROUP, msg, collect=True)
        records = []
        for reply in replies:
            peer = reply.get(b"peer")
            addr = reply.get(b"addr")
            if isinstance(peer, bytes) and len(peer) == 20 and isinstance(addr, bytes):
                records.append(PeerRecord(addr.decode(), PeerID(peer), self.clock.now, ("multicast",)))
        return merge_records(records)

    def checkin(self, node: SyncNode) -> None:
        """Re-announce every share the node holds, without waiting for replies."""
        if not node.online:
            return
        for share_id, state in sorted(node.shares.items(), key=lambda kv: kv[0].id):
            if state.config.stopped_by_user:
                continue
            if state.config.use_tracker:
                self.fire(node.address, self.tracker_address,
                          make(MessageKind.TRACKER_ANNOUNCE, share_id.id, peer=node.peer_id.id,
                               addr=node.address.encode(), reg=1))
            if state.config.use_dht:
                try:
                    targets = self.dht_storage_nodes(share_id)
                except NoReachableStorageNodes:
                    continue
                for target in targets:
                    self.fire(node.address, target.address,
                              make(MessageKind.DHT_ANNOUNCE, share_id.id, peer=node.peer_id.id,
                                   addr=node.address.encode()))

    def _periodic_checkin(self, node: SyncNode) -> None:
        self.checkin(node)
        self.clock.schedule(node.settings.checkin_ms, self._periodic_checkin, node, label=f"checkin {node.name}")

    def discover(self, node: SyncNode, share: ShareID, methods) -> list[PeerRecord]:
        """Union of the requested discovery methods ("multicast", "tracker", "dht")."""
        records: list[PeerRecord] = []
        if "multicast" in methods:
            records += self.multicast_ping(node, share)
        if "tracker" in methods:
            try:
                records += self.tracker_announce(node, share, register="register" in methods)
            except PeerUnreachable:
                pass
        if "dht" in methods:
            try:
                records += self.dht_get_peers(node, share)
            except NoReachableStorageNodes:
                pass
        return merge_records(r for r in records if r.address != node.address)

    # -- sessions and transfer --------------------------------------------

    def session_handshake(self, client: SyncNode, address: str, share: ShareID, secret: Secret) -> Handshake:
        hello = self.request(client.address, address, make(MessageKind.HELLO, None, peer=client.peer_id.id))
        server_peer = hello.get(b"peer")
        challenge = self.request(client.address, address, make(MessageKind.CHALLENGE, share.id))
        nonce = challenge.get(b"nonce")
        if not isinstance(nonce, bytes):
            raise ProtocolError(f"{address}: challenge without nonce")
        proof = hashlib.sha1(nonce + secret.raw).digest()
        auth = self.request(client.address, address, make(MessageKind.AUTH, share.id, proof=proof))
        token = auth.get(b"token")
        if not isinstance(token, bytes):
            raise ProtocolError(f"{address}: auth reply without token")
        return Handshake(
            address,
            share,
            token,
            auth.get(b"scope", b"").decode(errors="replace"),
            PeerID(server_peer) if isinstance(server_peer, bytes) and len(server_peer) == 20 else None,
            auth.get(b"level") if isinstance(auth.get(b"level"), int) else None,
        )

    def fetch_manifest(self, client: SyncNode, session: Handshake) -> ShareManifest:
        reply = self.request(client.address, session.address,
                             make(MessageKind.MANIFEST_REQUEST, session.share.id, token=session.token))
        body = reply.get(b"manifest")
        try:
            return parse_manifest(bencode.encode(body), share_id=session.share)
        except (ValueError, TypeError) as exc:
            raise ProtocolError(f"{session.address}: unusable manifest ({exc})") from None

    def fetch_piece(self, client: SyncNode, session: Handshake, path: str, index: int) -> bytes:
        reply = self.request(client.address, session.address,
                             make(MessageKind.PIECE_REQUEST, session.share.id, token=session.token,
                                  path=path.encode("utf-8"), index=index))
        data = reply.get(b"data")
        if not isinstance(data, bytes):
            raise ProtocolError(f"{session.address}: piece reply without data")
        return data

    # -- synchronisation -------------------------------------------------

    def _sync_methods(self, state) -> set[str]:
        cfg = state.config
        methods = {"register"}
        if cfg.use_lan_broadcast:
            methods.add("multicast")
        if cfg.use_tracker:
            methods.add("tracker")
        if cfg.use_dht:
            methods.add("dht")
        return methods

    def node_sync(self, node: SyncNode, share: ShareID) -> SyncReport:
        """Pull every newer or missing file from the peers that can be found."""
        if not node.online:
            raise NodeOffline(f"{node.name} is offline")
        state = node.share(share)
        report = SyncReport(node.name, share)
        node._log(self, LogEventKind.SYNC_START, share=share)
        records = self.discover(node, share, self._sync_methods(state))
        if state.config.use_known_hosts:
            records = merge_records(records + [PeerRecord(h, None, None, ("known_hosts",))
                                               for h in state.config.known_hosts if h != node.address])
        report.peers_found = records
        if not records:
            report.errors.append(f"{NoPeersFound.code}: no peers for {share.hex}")
            return report

        secret = as_readonly(state.secret)
        remotes: list[tuple[PeerRecord, Handshake, ShareManifest]] = []
        for record in records:
            try:
                session = self.session_handshake(node, record.address, share, secret)
                node.contacts[record.address] = session.server_peer
                node._log(self, LogEventKind.PEER_CONNECT, share=share, peer_id=session.server_peer,
                          host=record.address)
                remotes.append((record, session, self.fetch_manifest(node, session)))
            except SyncNetError as exc:
                report.errors.append(f"{record.address}: {exc}")

        paths = sorted({e.path for _, _, m in remotes for e in m.files})
        for path in paths:
            offers = [(r, s, m, m.entry(path)) for r, s, m in remotes]
            offers = [o for o in offers if o[3] is not None]
            best = max((o[3] for o in offers), key=lambda e: (e.mtime, e.hash20, -e.state))
            local = state.manifest.entry(path)
            if local is not None and local.invalidated:
                continue  # frozen
            if best.state == STATE_DELETED or best.invalidated:
                if best.state == STATE_DELETED and local is not None and local.is_live and best.mtime >= local.mtime:
                    node.apply_remote_delete(self, share, replace(best, extra=dict(best.extra)))
                    report.deleted.append(path)
                continue
            wanted = (
                local is None
                or (local.state == STATE_DELETED and best.mtime > local.mtime)
                or (local.is_live and best.hash20 != local.hash20 and (best.mtime, best.hash20) > (local.mtime, local.hash20))
            )
            if not wanted:
                continue
            sources = [(r, s, m) for r, s, m, e in offers if e.is_live and e.hash20 == best.hash20 and m.meta_for(path)]
            if not sources:
                continue
            self._download(node, share, path, best, sources, report)

        when = self.epoch_seconds()
        for record, session, _ in remotes:
            if session.server_peer is not None:
                state.config.record_peer(session.server_peer, when)
            report.peers_synced.append(record.address)
        return report

    def _download(self, node: SyncNode, share: ShareID, path: str, entry: FileEntry, sources, report: SyncReport):
        meta: FileMeta = sources[0][2].meta_for(path)
        pieces: dict[int, bytes] = {}
        first_source = None
        for index in range(meta.piece_count):
            for record, session, _ in sources:
                try:
                    piece = self.fetch_piece(node, session, path, index)
                except SyncNetError:
                    continue
                report.pieces_transferred += 1
                try:
                    ok = integrity.verify_piece(piece, index, meta)
                except integrity.IntegrityError:
                    ok = False
                if not ok:
                    report.failed_pieces += 1
                    continue
                pieces[index] = piece
                first_source = first_source or (record, session)
                break
        missing = [i for i in range(meta.piece_count) if i not in pieces]
        if missing:
            report.incomplete[path] = missing
            return
        content = b"".join(pieces[i] for i in range(meta.piece_count))
        if integrity.sha1(content) != entry.hash20:
            report.errors.append(f"{path}: reassembled content does not match hash20")
            return
        node.install(self, share, replace(entry, extra=dict(entry.extra)), meta, content)
        record, session = first_source or (sources[0][0], sources[0][1])
        node._log(self, LogEventKind.DOWNLOAD, share=share, peer_id=session.server_peer or record.peer_id,
                  host=record.address, path=path)
        report.downloaded.append(path)
