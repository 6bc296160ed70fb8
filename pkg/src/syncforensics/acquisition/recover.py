"""Fetch a target file piece by piece from remote peers, verifying each piece
on arrival and logging every step for the chain of custody.

Retry discipline per piece: a piece that fails verification is discarded and
requested once more from the same peer, then from each alternate in turn.
A peer that cannot supply the piece at all is skipped immediately.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .. import integrity
from ..artifacts import FileMeta
from ..identity import Secret
from ..integrity import VerificationResult, verify_file
from ..syncnet import Network, PeerRecord, SyncNode
from ..syncnet.errors import SyncNetError
from ..syncnet.network import Handshake
from .targets import TargetFile


class NoEligiblePeers(ValueError):
    pass


@dataclass(frozen=True)
class RecoveryPolicy:
    """``known_peers_only`` restricts every contact to ``allowed`` addresses."""

    known_peers_only: bool = False
    allowed: frozenset[str] = frozenset()

    @classmethod
    def known_peers(cls, addresses) -> "RecoveryPolicy":
        return cls(True, frozenset(addresses))

    def permits(self, address: str) -> bool:
        return not self.known_peers_only or address in self.allowed


@dataclass(frozen=True)
class CustodyEvent:
    t_ms: int
    action: str
    peer: str | None = None
    detail: tuple = ()

    def to_dict(self) -> dict:
        return {"t_ms": self.t_ms, "action": self.action, "peer": self.peer, **dict(self.detail)}


@dataclass
class CustodyLog:
    events: list[CustodyEvent] = field(default_factory=list)

    def add(self, net: Network, action: str, peer: str | None = None, **detail) -> CustodyEvent:
        event = CustodyEvent(net.clock.now, action, peer, tuple(sorted(detail.items())))
        self.events.append(event)
        return event

    def of(self, action: str) -> list[CustodyEvent]:
        return [e for e in self.events if e.action == action]

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.events]


@dataclass
class EvidenceRecord:
    target: TargetFile
    pieces: dict[int, bytes]
    verification: VerificationResult
    sources: list[tuple[PeerRecord, list[int]]]
    custody_log: CustodyLog
    meta: FileMeta | None = None

    @property
    def content(self) -> bytes | None:
        if self.meta is None or self.verification.missing_pieces or self.verification.failed_pieces:
            return None
        return b"".join(self.pieces[i] for i in range(self.meta.piece_count))

    @property
    def status(self) -> integrity.Status:
        return self.verification.status


def _record_failure(custody: CustodyLog, net: Network, peer: str, step: str, exc: Exception) -> None:
    custody.add(net, "error", peer, step=step, error=type(exc).__name__, message=str(exc))


def _prepare(target, record, secret, net, node, custody) -> tuple[Handshake, FileMeta] | None:
    """Authenticate with one peer and check it offers the target version."""
    address = record.address
    custody.add(net, "request", address, kind="HANDSHAKE", share=target.share.hex)
    try:
        session = net.session_handshake(node, address, target.share, secret)
    except SyncNetError as exc:
        _record_failure(custody, net, address, "handshake", exc)
        return None
    custody.add(net, "response", address, kind="AUTH", scope=session.scope,
                peer_id=session.server_peer.hex if session.server_peer else None)
    custody.add(net, "request", address, kind="MANIFEST_REQUEST")
    try:
        manifest = net.fetch_manifest(node, session)
    except SyncNetError as exc:
        _record_failure(custody, net, address, "manifest", exc)
        return None
    entry = manifest.entry(target.path)
    meta = manifest.meta_for(target.path)
    custody.add(net, "response", address, kind="MANIFEST_RESPONSE", files=len(manifest.files),
                entry=entry is not None)
    reason = None
    if entry is None or meta is None:
        reason = "file not in manifest"
    elif not entry.is_live:
        reason = "entry deleted or invalidated"
    elif entry.hash20 != target.expected_hash:
        reason = f"holds a different version ({entry.hash20.hex().upper()})"
    elif target.meta is not None and meta.piece_hashes != target.meta.piece_hashes:
        reason = "piece hashes differ from the local manifest"
    custody.add(net, "eligibility", address, eligible=reason is None, reason=reason or "")
    if reason is not None:
        return None
    return session, meta


def recover(
    target: TargetFile,
    peers: list[PeerRecord],
    secret: Secret,
    policy: RecoveryPolicy,
    net: Network,
    node: SyncNode,
) -> EvidenceRecord:
    allowed = [p for p in peers if policy.permits(p.address)]
    if policy.known_peers_only and not allowed:
        raise NoEligiblePeers("known-peers policy with no permitted peer")
    custody = CustodyLog()
    custody.add(net, "start", None, path=target.path, reason=target.reason.value,
                expected_hash=target.expected_hash.hex().upper(),
                policy="KnownPeersOnly" if policy.known_peers_only else "Open")

    sources: list[tuple[PeerRecord, Handshake, FileMeta]] = []
    for record in allowed:
        prepared = _prepare(target, record, secret, net, node, custody)
        if prepared is not None:
            session = prepared[0]
            if record.peer_id is None and session.server_peer is not None:
                record = replace(record, peer_id=session.server_peer)
            sources.append((record, *prepared))

    meta = target.meta or (sources[0][2] if sources else None)
    pieces: dict[int, bytes] = {}
    served: dict[str, list[int]] = {}
    if meta is not None:
        for index in range(meta.piece_count):
            attempts = []
            for rank, source in enumerate(sources):
                attempts += [source, source] if rank == 0 else [source]
            tried_unavailable = set()
            for record, session, _ in attempts:
                if record.address in tried_unavailable:
                    continue
                custody.add(net, "request", record.address, kind="PIECE_REQUEST", path=target.path, index=index)
                try:
                    piece = net.fetch_piece(node, session, target.path, index)
                except SyncNetError as exc:
                    _record_failure(custody, net, record.address, f"piece {index}", exc)
                    tried_unavailable.add(record.address)
                    continue
                custody.add(net, "response", record.address, kind="PIECE_RESPONSE", index=index,
                            length=len(piece), sha1=integrity.sha1(piece).hex().upper())
                try:
                    ok = integrity.verify_piece(piece, index, meta)
                except integrity.IntegrityError:
                    ok = False
                custody.add(net, "verify", record.address, index=index, ok=ok)
                if ok:
                    pieces[index] = piece
                    served.setdefault(record.address, []).append(index)
                    custody.add(net, "accept", record.address, index=index)
                    break
                custody.add(net, "discard", record.address, index=index)

    if meta is None:
        verification = VerificationResult(integrity.Status.PARTIAL, frozenset(), frozenset(), frozenset())
    else:
        verification = verify_file(pieces, meta, whole_file_hash=target.expected_hash)
    custody.add(net, "result", None, status=verification.status.value,
                missing=",".join(str(i) for i in sorted(verification.missing_pieces)))
    by_address = {r.address: r for r, _, _ in sources}
    source_list = [(by_address[a], idx) for a, idx in served.items()]
    return EvidenceRecord(target, pieces, verification, source_list, custody, meta)
