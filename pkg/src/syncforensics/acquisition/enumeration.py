"""Build the list of peers that may still hold a share."""

from __future__ import annotations

import enum

from ..identity import IdentityError, ShareID, derive_share_id
from ..syncnet import Network, PeerRecord, SyncNode, merge_records
from ..syncnet.discovery import NoReachableStorageNodes
from ..syncnet.errors import SyncNetError
from .disk import LocalEvidence


class Method(str, enum.Enum):
    MULTICAST = "multicast"
    TRACKER = "tracker"
    DHT = "dht"
    KNOWN_HOSTS = "known_hosts"
    SYNC_LOG = "sync_log"

    @classmethod
    def parse(cls, text: str) -> set["Method"]:
        """Comma-separated names; ``none`` gives the empty set and ``all`` every method."""
        names = [t.strip().lower() for t in text.split(",") if t.strip()]
        if names == ["none"]:
            return set()
        if names == ["all"]:
            return set(cls)
        aliases = {"synclog": "sync_log", "synclog_history": "sync_log", "knownhosts": "known_hosts",
                   "lan": "multicast"}
        try:
            return {cls(aliases.get(n, n)) for n in names}
        except ValueError as exc:
            raise ValueError(f"unknown discovery method in {text!r}") from exc


def _history(evidence: LocalEvidence | None, share: ShareID) -> list[PeerRecord]:
    if evidence is None or evidence.log is None:
        return []
    records = []
    for event in evidence.log.events:
        if event.host is None or (event.share is not None and event.share != share):
            continue
        # offline knowledge only: no liveness claim
        records.append(PeerRecord(event.host, event.peer_id, None, ("sync_log",)))
    return records


def _known_hosts(evidence: LocalEvidence | None, share: ShareID) -> list[PeerRecord]:
    if evidence is None:
        return []
    records = []
    for config in evidence.configs:
        try:
            if derive_share_id(config.secret) != share:
                continue
        except IdentityError:
            continue
        records += [PeerRecord(h, None, None, ("known_hosts",)) for h in config.known_hosts]
    return records


def enumerate_peers(
    share: ShareID,
    methods: set[Method],
    net: Network | None = None,
    node: SyncNode | None = None,
    evidence: LocalEvidence | None = None,
) -> list[PeerRecord]:
    """Union of every enabled method, deduplicated by (PeerID, address).

    Live methods query the network from ``node`` without registering it with
    the tracker or DHT.
    """
    records: list[PeerRecord] = []
    live = {Method.MULTICAST, Method.TRACKER, Method.DHT} & methods
    if live and (net is None or node is None):
        raise ValueError("live discovery methods need a network and an investigator node")
    if Method.MULTICAST in methods:
        records += net.multicast_ping(node, share)
    if Method.TRACKER in methods:
        try:
            records += net.tracker_announce(node, share, register=False)
        except SyncNetError:
            pass
    if Method.DHT in methods:
        try:
            records += net.dht_get_peers(node, share)
        except NoReachableStorageNodes:
            pass
    if Method.KNOWN_HOSTS in methods:
        records += _known_hosts(evidence, share)
    if Method.SYNC_LOG in methods:
        records += _history(evidence, share)
    own = node.address if node is not None else None
    return merge_records(r for r in records if r.address != own)
