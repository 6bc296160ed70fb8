"""Peer records and the two check-in registries: the tracker and the DHT.

Both registries expire an entry once it is strictly older than the TTL: a
peer that checked in at ``t0`` is returned for every query at
``now <= t0 + ttl`` and never after.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..identity import PeerID, ShareID

DHT_K = 2


class NoReachableStorageNodes(RuntimeError):
    pass


@dataclass(frozen=True)
class PeerRecord:
    address: str
    peer_id: PeerID | None = None
    last_seen: int | None = None  # sim milliseconds of the last check-in, when known
    sources: tuple[str, ...] = ()

    @property
    def host(self) -> str:
        return self.address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.address.rsplit(":", 1)[1])

    def merged(self, other: "PeerRecord") -> "PeerRecord":
        seen = [t for t in (self.last_seen, other.last_seen) if t is not None]
        return replace(
            self,
            peer_id=self.peer_id or other.peer_id,
            last_seen=max(seen) if seen else None,
            sources=tuple(sorted(set(self.sources) | set(other.sources))),
        )

    def to_dict(self) -> dict:
        return {
            "address": self.address,
            "peer_id": self.peer_id.hex if self.peer_id else None,
            "last_seen": self.last_seen,
            "sources": list(self.sources),
        }


def merge_records(records) -> list[PeerRecord]:
    """Deduplicate by (PeerID, address), folding discovery sources together."""
    by_key: dict[tuple, PeerRecord] = {}
    anonymous: dict[str, PeerRecord] = {}
    for rec in records:
        if rec.peer_id is None:
            anonymous[rec.address] = anonymous[rec.address].merged(rec) if rec.address in anonymous else rec
            continue
        key = (rec.peer_id.id, rec.address)
        by_key[key] = by_key[key].merged(rec) if key in by_key else rec
    # an address-only record folds into an identified one at the same address
    for address, rec in anonymous.items():
        match = next((k for k in by_key if k[1] == address), None)
        if match is not None:
            by_key[match] = by_key[match].merged(rec)
        else:
            by_key[(b"", address)] = rec
    return [by_key[k] for k in sorted(by_key, key=lambda k: (k[1], k[0]))]


@dataclass
class Registration:
    peer_id: PeerID
    address: str
    last_checkin: int


@dataclass
class CheckinRegistry:
    """ShareID -> peers with their last check-in time (sim milliseconds)."""

    ttl_ms: int
    registry: dict[ShareID, dict[PeerID, Registration]] = field(default_factory=dict)

    def register(self, share: ShareID, peer_id: PeerID, address: str, now: int) -> None:
        self.registry.setdefault(share, {})[peer_id] = Registration(peer_id, address, now)

    def live(self, share: ShareID, now: int, exclude: PeerID | None = None) -> list[Registration]:
        horizon = now - self.ttl_ms
        return sorted(
            (r for r in self.registry.get(share, {}).values() if r.last_checkin >= horizon and r.peer_id != exclude),
            key=lambda r: (r.address, r.peer_id.id),
        )

    def expire(self, now: int) -> None:
        horizon = now - self.ttl_ms
        for share in list(self.registry):
            peers = {k: r for k, r in self.registry[share].items() if r.last_checkin >= horizon}
            if peers:
                self.registry[share] = peers
            else:
                del self.registry[share]


class TrackerState(CheckinRegistry):
    def announce(self, share: ShareID, peer: PeerRecord, now: int, register: bool = True) -> list[PeerRecord]:
        """Refresh ``peer`` (unless ``register`` is false) and list the other live peers."""
        if register and peer.peer_id is not None:
            self.register(share, peer.peer_id, peer.address, now)
        return [
            PeerRecord(r.address, r.peer_id, r.last_checkin, ("tracker",))
            for r in self.live(share, now, exclude=peer.peer_id)
        ]


def xor_distance(a: bytes, b: bytes) -> int:
    return int.from_bytes(a, "big") ^ int.from_bytes(b, "big")


def xor_closest(target: bytes, candidates, k: int = DHT_K, id_of=lambda c: c) -> list:
    """The ``k`` candidates whose ids (raw bytes via ``id_of``) are XOR-closest to ``target``."""
    return sorted(candidates, key=lambda c: xor_distance(id_of(c), target))[:k]
