"""Cross-tabulate evidence items against the sources that can hold them.

``RECOVERABILITY`` fixes which source can hold which item: a cell left
blank there is reported ``not-applicable`` whatever the source happens
to contain.  Mobile artifacts are folded into
the disk columns, since the mobile application keeps the same files.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..artifacts import ArtifactSet
from ..identity import IdentityError, derive_share_id
from ..syncnet.network import MULTICAST_GROUP
from .disk import LocalEvidence, analyze_disk
from .memory import MemoryFindings, scan_memory

ITEMS = ("ShareID", "Secret", "PeerID", "FileList", "FileHash", "RemotePeers", "Ports")
SOURCES = ("Network", "RAM", "sync.dat", ".SyncID", "ShareID.db", "sync.log")

# R = recoverable, P = possibly recoverable, blank = not applicable
RECOVERABILITY = {
    "ShareID": ("R", "R", "R", "R", "", "R"),
    "Secret": ("", "R", "R", "", "", ""),
    "PeerID": ("R", "P", "", "", "R", ""),
    "FileList": ("", "P", "", "", "R", "R"),
    "FileHash": ("", "P", "", "", "R", ""),
    "RemotePeers": ("R", "P", "", "", "R", "R"),
    "Ports": ("R", "R", "", "", "", "R"),
}

_PEER_KINDS = frozenset({
    "MULTICAST_PING", "DHT_ANNOUNCE", "DHT_GET_PEERS", "DHT_PEERS", "HELLO", "CHALLENGE", "AUTH",
    "MANIFEST_REQUEST", "MANIFEST_RESPONSE", "PIECE_REQUEST", "PIECE_RESPONSE", "ERROR",
})


class InsufficientSources(ValueError):
    pass


class CellState(str, enum.Enum):
    FOUND = "found"
    NOT_FOUND = "not-found"
    NOT_APPLICABLE = "not-applicable"


class Verdict(str, enum.Enum):
    AGREE = "AGREE"
    CONFLICT = "CONFLICT"
    SINGLE_SOURCE = "SINGLE_SOURCE"
    ABSENT = "ABSENT"


@dataclass
class NetworkObservation:
    observed: str | None
    entries: list[dict] = field(default_factory=list)


def parse_netlog(text: str) -> NetworkObservation:
    """Read the simulator's JSON-lines observation format."""
    obs = NetworkObservation(None)
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            item = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"netlog line {n}: {exc}") from None
        if not isinstance(item, dict):
            raise ValueError(f"netlog line {n}: not an object")
        if "observed" in item:
            obs.observed = item["observed"]
        else:
            obs.entries.append(item)
    return obs


@dataclass
class EntryPointBundle:
    disk: ArtifactSet | None = None
    memory: bytes | None = None
    network_log: NetworkObservation | None = None
    mobile: ArtifactSet | None = None

    @property
    def empty(self) -> bool:
        return self.disk is None and self.memory is None and self.network_log is None and self.mobile is None


@dataclass(frozen=True)
class Cell:
    state: CellState
    values: tuple[str, ...] = ()


@dataclass
class CorroborationMatrix:
    cells: dict[str, dict[str, Cell]]
    verdicts: dict[str, Verdict]
    conflicts: dict[str, dict[str, list[str]]] = field(default_factory=dict)

    def cell(self, item: str, source: str) -> Cell:
        return self.cells[item][source]

    def corroborated(self, item: str) -> bool:
        found = [c.values for c in self.cells[item].values() if c.state is CellState.FOUND]
        return any(found.count(v) >= 2 for v in found)

    def to_dict(self) -> dict:
        return {
            "sources": list(SOURCES),
            "items": {
                item: {
                    "cells": {s: {"state": c.state.value, "values": list(c.values)} for s, c in row.items()},
                    "verdict": self.verdicts[item].value,
                    "corroborated": self.corroborated(item),
                    **({"conflict": self.conflicts[item]} if item in self.conflicts else {}),
                }
                for item, row in self.cells.items()
            },
        }

    def render(self) -> str:
        width = max(len(s) for s in SOURCES)
        marks = {CellState.FOUND: "found", CellState.NOT_FOUND: "-", CellState.NOT_APPLICABLE: ""}
        lines = ["item".ljust(12) + "".join(s.ljust(width + 2) for s in SOURCES) + "verdict"]
        for item, row in self.cells.items():
            lines.append(item.ljust(12) + "".join(marks[row[s].state].ljust(width + 2) for s in SOURCES)
                         + self.verdicts[item].value)
        return "\n".join(lines)


def _network_values(obs: NetworkObservation) -> dict[str, set[str]]:
    me = obs.observed
    values = {k: set() for k in ("ShareID", "PeerID", "RemotePeers", "Ports")}
    for e in obs.entries:
        if e.get("share"):
            values["ShareID"].add(e["share"])
        if e.get("peer"):
            (values["PeerID"] if e.get("src") == me else values["RemotePeers"]).add(e["peer"])
        if e.get("kind") in _PEER_KINDS:
            for addr in (e.get("src"), e.get("dst")):
                if addr and addr != me and addr != MULTICAST_GROUP:
                    values["Ports"].add(addr)
    return values


def _disk_values(ev: LocalEvidence) -> dict[str, dict[str, set[str]]]:
    out = {s: {item: set() for item in ITEMS} for s in SOURCES[2:]}
    for config in ev.configs:
        out["sync.dat"]["Secret"].add(config.secret.text)
        try:
            out["sync.dat"]["ShareID"].add(derive_share_id(config.secret).hex)
        except IdentityError:
            pass
    for link in ev.links:
        if link.sync_id_share_id is not None:
            out[".SyncID"]["ShareID"].add(link.sync_id_share_id.hex)
    db = out["ShareID.db"]
    for manifest in ev.manifests.values():
        for entry in manifest.files:
            db["FileList"].add(entry.path)
            db["FileHash"].add(f"{entry.path}={entry.hash20.hex().upper()}")
        # local edits are the only entries a node authors itself on a read-only share
        local = {e.peer.hex for e in manifest.files if e.invalidated and e.peer is not None}
        db["PeerID"] |= local
        db["RemotePeers"] |= {e.peer.hex for e in manifest.files if e.peer is not None and not e.invalidated} - local
    log = out["sync.log"]
    if ev.log is not None:
        for event in ev.log.events:
            if event.share is not None:
                log["ShareID"].add(event.share.hex)
            if event.path is not None:
                log["FileList"].add(event.path)
            if event.peer_id is not None:
                log["RemotePeers"].add(event.peer_id.hex)
            if event.host is not None:
                log["Ports"].add(event.host)
    return out


def _ram_values(found: MemoryFindings) -> dict[str, set[str]]:
    return {
        "ShareID": found.share_ids,
        "Secret": {c.text for c in found.secrets},
        "PeerID": found.local_peer_ids,
        "RemotePeers": found.remote_peer_ids,
        "Ports": found.remote_endpoints,
    }


def corroborate(
    bundle: EntryPointBundle,
    disk_evidence: LocalEvidence | None = None,
    memory_findings: MemoryFindings | None = None,
) -> CorroborationMatrix:
    """Fill the matrix; already-parsed disk or memory results may be passed in."""
    if bundle.empty:
        raise InsufficientSources("no entry point supplied")
    values: dict[str, dict[str, set[str]]] = {s: {} for s in SOURCES}
    if bundle.network_log is not None:
        values["Network"] = _network_values(bundle.network_log)
    if bundle.memory is not None:
        values["RAM"] = _ram_values(memory_findings or scan_memory(bundle.memory))
    for tree, given in ((bundle.disk, disk_evidence), (bundle.mobile, None)):
        if tree is None:
            continue
        for source, items in _disk_values(given or analyze_disk(tree)).items():
            for item, vals in items.items():
                values[source].setdefault(item, set()).update(vals)

    cells, verdicts, conflicts = {}, {}, {}
    for item in ITEMS:
        row = {}
        for col, source in enumerate(SOURCES):
            if not RECOVERABILITY[item][col]:
                row[source] = Cell(CellState.NOT_APPLICABLE)
                continue
            vals = values[source].get(item, set())
            row[source] = Cell(CellState.FOUND, tuple(sorted(vals))) if vals else Cell(CellState.NOT_FOUND)
        cells[item] = row
        found = {s: c.values for s, c in row.items() if c.state is CellState.FOUND}
        if not found:
            verdicts[item] = Verdict.ABSENT
        elif len(found) == 1:
            verdicts[item] = Verdict.SINGLE_SOURCE
        elif len(set(found.values())) == 1:
            verdicts[item] = Verdict.AGREE
        else:
            verdicts[item] = Verdict.CONFLICT
            conflicts[item] = {s: list(v) for s, v in found.items()}
    return CorroborationMatrix(cells, verdicts, conflicts)


def load_bundle(disk: str | Path | None = None, memory: str | Path | None = None,
                netlog: str | Path | None = None, mobile: str | Path | None = None) -> EntryPointBundle:
    from ..artifacts import OSProfile, detect_profile, locate_artifacts

    bundle = EntryPointBundle()
    if disk is not None:
        bundle.disk = locate_artifacts(disk, detect_profile(disk))
    if mobile is not None:
        bundle.mobile = locate_artifacts(mobile, OSProfile.IOS)
    if memory is not None:
        bundle.memory = Path(memory).read_bytes()
    if netlog is not None:
        bundle.network_log = parse_netlog(Path(netlog).read_text(encoding="utf-8"))
    return bundle
