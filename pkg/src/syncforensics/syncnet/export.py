"""Write what an examiner would seize from each simulated machine.

Per node ``<out>/<name>/`` holds a disk tree laid out for the node's OS
profile.  ``<out>/captures/<name>/`` holds a synthetic process memory image
(online nodes only) and the node's view of the wire as JSON lines.
``<out>/simulation.json`` records the scenario and trace digest so that the
live network can be rebuilt later.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..artifacts import (
    APP_DIRS,
    SYNC_ID_NAME,
    OSProfile,
    SyncDat,
    dump_sync_dat,
    manifest_filename,
    write_settings,
    write_sync_id,
    write_sync_log,
)
from ..artifacts.manifest import write_manifest
from .network import MULTICAST_GROUP, Network
from .node import SyncNode
from .scenario import SimulationResult

SIMULATION_FILE = "simulation.json"
ARCHIVE_DIR = ".SyncArchive"
MEMORY_SIZE = 256 * 1024


@dataclass
class NodeExport:
    name: str
    root: Path
    app_dir: Path
    share_folders: dict[str, Path] = field(default_factory=dict)
    memory: Path | None = None
    netlog: Path | None = None


def share_folder(node: SyncNode, share_name: str) -> tuple[tuple[str, ...], str]:
    """Relative folder inside the node's tree and the path the client recorded."""
    profile = node.os_profile
    if profile is OSProfile.WINDOWS:
        return ("Documents", share_name), f"C:\\Users\\{node.name}\\Documents\\{share_name}"
    if profile is OSProfile.MACOS:
        return ("Documents", share_name), f"/Users/{node.name}/Documents/{share_name}"
    if profile is OSProfile.IOS:
        rel = APP_DIRS[OSProfile.IOS][:-1] + ("Storage",)
        return rel, "/private/var/mobile/" + "/".join(rel)
    return (share_name,), f"/home/{node.name}/{share_name}"


def _safe_join(base: Path, rel: str) -> Path:
    target = base.joinpath(*[p for p in rel.split("/") if p not in ("", ".", "..")])
    return target


def memory_image(node: SyncNode, net: Network, size: int = MEMORY_SIZE) -> bytes:
    """Noise with the strings a running client keeps resident.

    Every planted string is NUL-delimited, as C strings are in a heap.
    """
    items: list[bytes] = []
    for share_id, state in sorted(node.shares.items(), key=lambda kv: kv[0].id):
        items.append(state.secret.text.encode("ascii"))
        items.append(share_id.hex.encode("ascii"))
    items.append(node.peer_id.hex.encode("ascii"))
    items.append(f"0.0.0.0:{node.address.rsplit(':', 1)[1]}".encode())
    for address, peer in sorted(node.contacts.items()):
        # a connection record: remote endpoint followed by the remote PeerID
        items.append(f"{address} {peer.hex if peer is not None else '-'}".encode())
    rng = random.Random(f"memory:{net.seed}:{node.name}")
    total = sum(len(i) + 2 for i in items)
    if total > size:
        size = total
    gaps = sorted(rng.randrange(size - total + 1) for _ in items)
    out = bytearray()
    prev = 0
    for gap, item in zip(gaps, items):
        out += rng.randbytes(gap - prev)
        out += b"\0" + item + b"\0"
        prev = gap
    out += rng.randbytes(size - len(out))
    return bytes(out)


def netlog_lines(node: SyncNode, net: Network) -> list[str]:
    lines = [json.dumps({"observed": node.address}, sort_keys=True)]
    for entry in net.trace:
        seen = entry.src == node.address or entry.dst == node.address
        if entry.dst == MULTICAST_GROUP and entry.src != node.address:
            sender = net.nodes.get(entry.src)
            seen = sender is not None and sender.lan_domain == node.lan_domain
        if seen:
            lines.append(json.dumps(entry.to_dict(), sort_keys=True))
    return lines


def export_node(node: SyncNode, net: Network, out: Path) -> NodeExport:
    root = out / node.name
    app = root.joinpath(*APP_DIRS[node.os_profile])
    app.mkdir(parents=True, exist_ok=True)
    result = NodeExport(node.name, root, app)

    folders = []
    for share_id, state in sorted(node.shares.items(), key=lambda kv: kv[0].id):
        rel, declared = share_folder(node, state.name)
        folder = root.joinpath(*rel)
        folder.mkdir(parents=True, exist_ok=True)
        result.share_folders[state.name] = folder
        (folder / SYNC_ID_NAME).write_bytes(write_sync_id(share_id))
        for path, content in sorted(state.content.items()):
            if state.absent_pieces.get(path):
                continue  # a partial copy is never materialised as a file
            target = _safe_join(folder, path)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(content)
        for path, (content, expiry) in sorted(state.archive.items()):
            if net.clock.now <= expiry:
                target = _safe_join(folder / ARCHIVE_DIR, path)
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_bytes(content)
        (app / manifest_filename(share_id)).write_bytes(write_manifest(state.manifest))
        folders.append(replace(state.config, path=declared))

    (app / "sync.dat").write_bytes(dump_sync_dat(SyncDat(folders)))
    (app / "settings.dat").write_bytes(write_settings(node.settings))
    (app / "sync.log").write_bytes(write_sync_log(node.log).encode("utf-8"))

    captures = out / "captures" / node.name
    captures.mkdir(parents=True, exist_ok=True)
    if node.online:
        result.memory = captures / "memory.bin"
        result.memory.write_bytes(memory_image(node, net))
    result.netlog = captures / "netlog.jsonl"
    result.netlog.write_text("\n".join(netlog_lines(node, net)) + "\n", encoding="utf-8")
    return result


def export_simulation(sim: SimulationResult, out: str | Path) -> dict[str, NodeExport]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    exports = {}
    for node in sorted(sim.net.nodes.values(), key=lambda n: n.name):
        exports[node.name] = export_node(node, sim.net, out)
    summary = {
        "scenario": sim.spec.source,
        "seed": sim.spec.seed,
        "end_ms": sim.net.clock.now,
        "trace_digest": sim.trace_digest,
        "nodes": {
            n.name: {"address": n.address, "os": n.os_profile.value, "online": n.online,
                     "peer_id": n.peer_id.hex, "lan": n.lan_domain}
            for n in sorted(sim.net.nodes.values(), key=lambda n: n.name)
        },
    }
    (out / SIMULATION_FILE).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return exports
