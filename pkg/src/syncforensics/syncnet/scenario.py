"""JSON scenario documents: declaration, validation, and execution.

A scenario declares shares (secret plus file set), nodes (address, LAN
domain, OS profile, settings, which shares and pieces they hold, byzantine
behaviour) and a timeline of actions at simulated times.  Validation names
the offending field so the CLI can report it.
"""

from __future__ import annotations

import copy
import json
import random
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..artifacts import OSProfile, Settings, SyncDatConfig
from ..artifacts._schema import ArtifactError
from ..identity import (
    AccessLevel,
    IdentityError,
    Secret,
    decode_secret,
    derive_readonly,
    derive_share_id,
    generate_peer_id,
    generate_secret,
)
from .errors import SyncNetError
from .network import DEFAULT_EPOCH, TRACKER_ADDRESS, Network, SyncReport
from .node import Byzantine, SyncNode

ACTIONS = ("sync", "delete", "secure_delete", "modify_offline", "go_offline", "go_online", "announce")
_PATH_ACTIONS = ("delete", "secure_delete", "modify_offline")
_TEXT_ALPHABET = string.ascii_letters + string.digits + " "


class ScenarioError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def seeded_content(size: int, seed: int | str) -> bytes:
    """Deterministic printable text of exactly ``size`` bytes."""
    rng = random.Random(f"file:{seed}")
    out = []
    for i in range(size):
        out.append("\n" if i % 64 == 63 else rng.choice(_TEXT_ALPHABET))
    return "".join(out).encode("ascii")


def _content(decl: Any, where: str) -> bytes:
    if isinstance(decl, str):
        return decl.encode("utf-8")
    if not isinstance(decl, dict):
        raise ScenarioError(where, "expected text or an object with size/seed, text or hex")
    if "text" in decl:
        return str(decl["text"]).encode("utf-8")
    if "hex" in decl:
        try:
            return bytes.fromhex(decl["hex"])
        except (TypeError, ValueError):
            raise ScenarioError(f"{where}.hex", "not valid hexadecimal") from None
    size = decl.get("size")
    if not isinstance(size, int) or isinstance(size, bool) or size < 0:
        raise ScenarioError(f"{where}.size", "must be a non-negative integer")
    return seeded_content(size, decl.get("seed", where))


@dataclass
class ShareDecl:
    name: str
    secret: Secret
    files: dict[str, bytes]


@dataclass
class NodeShareDecl:
    share: str
    access: AccessLevel
    files: list[str]
    pieces: dict[str, list[int]]
    flags: dict[str, int]
    known_hosts: list[str]


@dataclass
class NodeDecl:
    name: str
    address: str
    lan: str
    os: OSProfile
    settings: Settings
    auto_checkin: bool
    dht_node: bool
    shares: list[NodeShareDecl]
    byzantine: Byzantine | None


@dataclass
class Action:
    t_ms: int
    action: str
    node: str
    share: str | None = None
    path: str | None = None
    content: bytes | None = None


@dataclass
class ScenarioSpec:
    name: str
    seed: int | str
    epoch: int
    end_ms: int
    latency_ms: tuple[int, int]
    tracker_address: str
    ttl_minutes: int
    shares: dict[str, ShareDecl]
    nodes: list[NodeDecl]
    timeline: list[Action]
    source: dict = field(default_factory=dict, repr=False)

    def node(self, name: str) -> NodeDecl:
        return next(n for n in self.nodes if n.name == name)


def _int(d: dict, key: str, where: str, default=None, lo=None, hi=None) -> int:
    value = d.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioError(f"{where}.{key}", "must be an integer")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ScenarioError(f"{where}.{key}", f"out of range [{lo}, {hi}]")
    return value


def _str(d: dict, key: str, where: str, default=None) -> str:
    value = d.get(key, default)
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"{where}.{key}", "must be a non-empty string")
    return value


def _parse_share(name: str, decl: Any, seed) -> ShareDecl:
    where = f"shares.{name}"
    if not isinstance(decl, dict):
        raise ScenarioError(where, "must be an object")
    if "secret" in decl:
        try:
            secret = decode_secret(decl["secret"])
        except (IdentityError, TypeError) as exc:
            raise ScenarioError(f"{where}.secret", str(exc)) from None
        if secret.access_level != AccessLevel.MASTER:
            raise ScenarioError(f"{where}.secret", "must be a master secret")
    else:
        secret = generate_secret(AccessLevel.MASTER, random.Random(f"secret:{decl.get('secret_seed', f'{seed}:{name}')}"))
    files = decl.get("files", {})
    if not isinstance(files, dict):
        raise ScenarioError(f"{where}.files", "must be an object of path -> content")
    contents = {}
    for path, content in files.items():
        if not path or path.startswith("/") or ".." in path.split("/"):
            raise ScenarioError(f"{where}.files", f"bad relative path {path!r}")
        contents[path] = _content(content, f"{where}.files.{path}")
    return ShareDecl(name, secret, dict(sorted(contents.items())))


def _parse_node(i: int, decl: Any, shares: dict[str, ShareDecl]) -> NodeDecl:
    where = f"nodes[{i}]"
    if not isinstance(decl, dict):
        raise ScenarioError(where, "must be an object")
    name = _str(decl, "name", where)
    address = _str(decl, "address", where)
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise ScenarioError(f"{where}.address", f"expected host:port, got {address!r}")
    try:
        profile = OSProfile(decl.get("os", "linux"))
    except ValueError:
        raise ScenarioError(f"{where}.os", f"unknown OS profile {decl.get('os')!r}") from None
    raw_settings = decl.get("settings", {})
    if not isinstance(raw_settings, dict):
        raise ScenarioError(f"{where}.settings", "must be an object")
    try:
        settings = Settings(**raw_settings)
    except (TypeError, ArtifactError) as exc:
        raise ScenarioError(f"{where}.settings", str(exc)) from None

    held = []
    for j, sdecl in enumerate(decl.get("shares", [])):
        swhere = f"{where}.shares[{j}]"
        sname = _str(sdecl, "share", swhere)
        if sname not in shares:
            raise ScenarioError(f"{swhere}.share", f"undeclared share {sname!r}")
        access = sdecl.get("access", "master")
        if access not in ("master", "readonly"):
            raise ScenarioError(f"{swhere}.access", "must be 'master' or 'readonly'")
        files = sdecl.get("files", "all" if access == "master" else [])
        if files == "all":
            files = list(shares[sname].files)
        if not isinstance(files, list) or any(f not in shares[sname].files for f in files):
            raise ScenarioError(f"{swhere}.files", "must be 'all' or a list of paths declared by the share")
        pieces = sdecl.get("pieces", {})
        if not isinstance(pieces, dict) or any(p not in files for p in pieces):
            raise ScenarioError(f"{swhere}.pieces", "keys must be files this node holds")
        for path, idx in pieces.items():
            if not isinstance(idx, list) or not all(isinstance(k, int) and k >= 0 for k in idx):
                raise ScenarioError(f"{swhere}.pieces.{path}", "must be a list of piece indices")
        flags = sdecl.get("flags", {})
        if not isinstance(flags, dict) or any(v not in (0, 1) for v in flags.values()):
            raise ScenarioError(f"{swhere}.flags", "flag values must be 0 or 1")
        unknown = set(flags) - set(SyncDatConfig.__dataclass_fields__)
        if unknown:
            raise ScenarioError(f"{swhere}.flags", f"unknown flags {sorted(unknown)}")
        known = sdecl.get("known_hosts", [])
        if not isinstance(known, list) or not all(isinstance(h, str) for h in known):
            raise ScenarioError(f"{swhere}.known_hosts", "must be a list of host:port strings")
        held.append(NodeShareDecl(sname, AccessLevel.MASTER if access == "master" else AccessLevel.READ_ONLY,
                                  list(files), pieces, flags, known))

    byz = decl.get("byzantine")
    byzantine = None
    if byz:
        if byz is True:
            byz = {}
        if not isinstance(byz, dict):
            raise ScenarioError(f"{where}.byzantine", "must be true or an object")
        pieces = byz.get("pieces")
        limit = byz.get("max_corruptions")
        if limit is not None and (not isinstance(limit, int) or limit < 0):
            raise ScenarioError(f"{where}.byzantine.max_corruptions", "must be a non-negative integer")
        byzantine = Byzantine(frozenset(pieces) if pieces is not None else None, limit)

    return NodeDecl(name, address, str(decl.get("lan", "")), profile, settings,
                    bool(decl.get("auto_checkin", True)), bool(decl.get("dht_node", True)), held, byzantine)


def _parse_action(i: int, decl: Any, spec_nodes: dict[str, NodeDecl], shares: dict[str, ShareDecl]) -> Action:
    where = f"timeline[{i}]"
    if not isinstance(decl, dict):
        raise ScenarioError(where, "must be an object")
    t_ms = _int(decl, "t_ms", where, lo=0)
    action = decl.get("action")
    if action not in ACTIONS:
        raise ScenarioError(f"{where}.action", f"unknown action {action!r}; expected one of {', '.join(ACTIONS)}")
    node = decl.get("node")
    if node not in spec_nodes:
        raise ScenarioError(f"{where}.node", f"undeclared node {node!r}")
    share = decl.get("share")
    if action in ("sync",) + _PATH_ACTIONS:
        held = [s.share for s in spec_nodes[node].shares]
        if share not in held:
            raise ScenarioError(f"{where}.share", f"node {node!r} does not hold share {share!r}")
    path = decl.get("path")
    content = None
    if action in _PATH_ACTIONS:
        if path not in shares[share].files:
            raise ScenarioError(f"{where}.path", f"share {share!r} declares no file {path!r}")
        if action == "modify_offline":
            if "content" not in decl:
                raise ScenarioError(f"{where}.content", "modify_offline needs new content")
            content = _content(decl["content"], f"{where}.content")
    return Action(t_ms, action, node, share, path, content)


def parse_scenario(doc: dict | str | bytes) -> ScenarioSpec:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ScenarioError("document", f"invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ScenarioError("document", "must be a JSON object")
    seed = doc.get("seed", 0)
    if not isinstance(seed, (int, str)) or isinstance(seed, bool):
        raise ScenarioError("seed", "must be an integer or string")
    latency = doc.get("latency_ms", [5, 40])
    if (not isinstance(latency, list) or len(latency) != 2 or not all(isinstance(v, int) for v in latency)
            or not 0 <= latency[0] <= latency[1]):
        raise ScenarioError("latency_ms", "must be [lo, hi] with 0 <= lo <= hi")
    tracker = doc.get("tracker", {})
    if not isinstance(tracker, dict):
        raise ScenarioError("tracker", "must be an object")
    ttl = _int(tracker, "ttl_minutes", "tracker", default=30, lo=10, hi=60)

    raw_shares = doc.get("shares", {})
    if not isinstance(raw_shares, dict) or not raw_shares:
        raise ScenarioError("shares", "must declare at least one share")
    shares = {name: _parse_share(name, decl, seed) for name, decl in raw_shares.items()}

    raw_nodes = doc.get("nodes", [])
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ScenarioError("nodes", "must declare at least one node")
    nodes = [_parse_node(i, decl, shares) for i, decl in enumerate(raw_nodes)]
    by_name: dict[str, NodeDecl] = {}
    addresses = set()
    for i, n in enumerate(nodes):
        if n.name in by_name:
            raise ScenarioError(f"nodes[{i}].name", f"duplicate node name {n.name!r}")
        if n.address in addresses:
            raise ScenarioError(f"nodes[{i}].address", f"duplicate address {n.address}")
        by_name[n.name] = n
        addresses.add(n.address)

    raw_timeline = doc.get("timeline", [])
    if not isinstance(raw_timeline, list):
        raise ScenarioError("timeline", "must be a list")
    timeline = [_parse_action(i, decl, by_name, shares) for i, decl in enumerate(raw_timeline)]
    for i in range(1, len(timeline)):
        if timeline[i].t_ms < timeline[i - 1].t_ms:
            raise ScenarioError(f"timeline[{i}].t_ms", "times must be non-decreasing")
    last = timeline[-1].t_ms if timeline else 0
    end_ms = _int(doc, "end_ms", "document", default=last, lo=last)

    return ScenarioSpec(
        name=str(doc.get("name", "scenario")),
        seed=seed,
        epoch=_int(doc, "epoch", "document", default=DEFAULT_EPOCH, lo=0),
        end_ms=end_ms,
        latency_ms=(latency[0], latency[1]),
        tracker_address=str(tracker.get("address", TRACKER_ADDRESS)),
        ttl_minutes=ttl,
        shares=shares,
        nodes=nodes,
        timeline=timeline,
        source=copy.deepcopy(doc),
    )


def load_scenario(path: str | Path) -> ScenarioSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError("document", f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text)


def bundled_scenario(name: str = "poc.json") -> ScenarioSpec:
    from importlib import resources

    return parse_scenario(resources.files("syncforensics.data").joinpath(name).read_text(encoding="utf-8"))


@dataclass
class SimulationResult:
    spec: ScenarioSpec
    net: Network
    sync_reports: list[SyncReport]

    @property
    def trace_digest(self) -> str:
        return self.net.clock.trace_digest()

    def node(self, name: str) -> SyncNode:
        return self.net.node(name)


def build_network(spec: ScenarioSpec, transport=None) -> Network:
    net = Network(seed=spec.seed, latency_ms=spec.latency_ms, epoch=spec.epoch,
                  ttl_ms=spec.ttl_minutes * 60_000, tracker_address=spec.tracker_address, transport=transport)
    for decl in spec.nodes:
        node = SyncNode(
            decl.name,
            decl.address,
            generate_peer_id(random.Random(f"peer:{spec.seed}:{decl.name}")),
            lan_domain=decl.lan,
            settings=decl.settings,
            os_profile=decl.os,
            seed=spec.seed,
            dht_node=decl.dht_node,
            auto_checkin=decl.auto_checkin,
            byzantine=decl.byzantine,
        )
        for held in decl.shares:
            share = spec.shares[held.share]
            secret = share.secret if held.access == AccessLevel.MASTER else derive_readonly(share.secret)
            config = SyncDatConfig(path=held.share, secret=secret, known_hosts=list(held.known_hosts), **held.flags)
            state = node.add_share(held.share, secret, config)
            for path in held.files:
                content = share.files[path]
                absent = ()
                if path in held.pieces:
                    n = -(-len(content) // node.settings.piece_len)
                    absent = [k for k in range(n) if k not in held.pieces[path]]
                node.add_file(net, state.share_id, path, content, absent_pieces=absent, mtime=spec.epoch)
        net.add_node(node)
    return net


def run_scenario(spec: ScenarioSpec, transport=None) -> SimulationResult:
    net = build_network(spec, transport)
    reports = []
    for i, action in enumerate(spec.timeline):
        net.clock.run_until(action.t_ms)
        try:
            _apply(net, spec, action, reports)
        except SyncNetError as exc:
            raise ScenarioError(f"timeline[{i}]", f"{action.action} failed: {exc}") from None
    net.clock.run_until(max(spec.end_ms, net.clock.now))
    return SimulationResult(spec, net, reports)


def _apply(net: Network, spec: ScenarioSpec, action: Action, reports: list[SyncReport]) -> None:
    node = net.node(action.node)
    share_id = derive_share_id(spec.shares[action.share].secret) if action.share is not None else None
    if action.action == "sync":
        reports.append(net.node_sync(node, share_id))
    elif action.action == "delete":
        node.delete_file(net, share_id, action.path)
    elif action.action == "secure_delete":
        node.secure_delete(net, share_id, action.path)
    elif action.action == "modify_offline":
        node.modify_offline(net, share_id, action.path, action.content)
    elif action.action == "go_offline":
        net.set_online(node, False)
    elif action.action == "go_online":
        net.set_online(node, True)
    elif action.action == "announce":
        net.checkin(node)
