"""The five acquisition steps end to end.

Discovery gathers the entry points; Investigation parses and corroborates
them and picks targets; Enumeration finds peers; Recovery fetches targets
through an isolated investigator node; Verification re-checks everything
and emits the report.

The live network is the simulated one: it is rebuilt by replaying the
scenario recorded in ``simulation.json`` next to the evidence.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..artifacts import detect_profile, locate_artifacts
from ..identity import IdentityError, Secret, ShareID, decode_secret, derive_share_id, generate_peer_id
from ..integrity import Status, VerificationResult, verify_file
from ..syncnet import Network, PeerRecord, SyncNode, parse_scenario, run_scenario
from ..syncnet.export import SIMULATION_FILE
from .corroborate import CorroborationMatrix, EntryPointBundle, corroborate, parse_netlog
from .disk import LocalEvidence, analyze_disk
from .enumeration import Method, enumerate_peers
from .memory import MemoryFindings, scan_memory
from .recover import CustodyEvent, CustodyLog, EvidenceRecord, NoEligiblePeers, RecoveryPolicy, recover
from .report import CaseMetadata, EvidenceReport, build_report, write_report
from .targets import TargetFile, identify_targets

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGRADED = 3
EXIT_NOTHING = 4

SURVEY_ADDRESS = "192.168.50.2:3839"
RECOVERY_ADDRESS = "192.168.50.3:3839"
LAB_DOMAIN = "forensic-lab"
LIVE_METHODS = frozenset({Method.MULTICAST, Method.TRACKER, Method.DHT})


class UsageError(ValueError):
    pass


@dataclass
class AcquisitionRequest:
    evidence_dir: Path
    case_out: Path
    memory: Path | None = None
    netlog: Path | None = None
    mobile: Path | None = None
    methods: set[Method] = field(default_factory=lambda: set(Method))
    known_peers: list[str] = field(default_factory=list)
    secret: str | None = None
    case_id: str | None = None
    network: Path | None = None
    seed: int | str = 0


@dataclass
class AcquisitionOutcome:
    exit_code: int
    report: EvidenceReport
    case_dir: Path
    evidence: LocalEvidence
    matrix: CorroborationMatrix
    targets: list[TargetFile]
    net: Network | None = None
    recovery_node: SyncNode | None = None


def find_simulation(evidence_dir: Path, explicit: Path | None = None) -> Path | None:
    if explicit is not None:
        return explicit
    for directory in [evidence_dir, *evidence_dir.resolve().parents][:4]:
        candidate = directory / SIMULATION_FILE
        if candidate.is_file():
            return candidate
    return None


def replay_network(simulation: Path) -> Network:
    doc = json.loads(simulation.read_text(encoding="utf-8"))
    return run_scenario(parse_scenario(doc["scenario"])).net


def investigator_node(net: Network, name: str, address: str, seed) -> SyncNode:
    node = SyncNode(name, address, generate_peer_id(random.Random(f"investigator:{seed}:{name}")),
                    lan_domain=LAB_DOMAIN, seed=seed, dht_node=False, auto_checkin=False)
    return net.add_node(node)


def _resolve_peer(net: Network | None, text: str) -> str:
    host, _, port = text.rpartition(":")
    if host and port.isdigit():
        return text
    if net is None:
        raise UsageError(f"--known-peer {text!r} is a name but no simulated network is available")
    try:
        return net.node(text).address
    except KeyError:
        raise UsageError(f"--known-peer {text!r} names no node in the network") from None


def _secret_for(share: ShareID, req: AcquisitionRequest, evidence: LocalEvidence,
                memory: MemoryFindings | None) -> tuple[Secret | None, str]:
    if req.secret is not None:
        secret = decode_secret(req.secret)
        if derive_share_id(secret) == share:
            return secret, "command line"
    secret = evidence.secret_for(share)
    if secret is not None:
        return secret, "sync.dat"
    if memory is not None:
        for cand in memory.secrets:
            if cand.share_id == share:
                return cand.secret, f"memory offset {cand.offset}"
    return None, ""


def _event(t_ms: int, action: str, **detail) -> CustodyEvent:
    return CustodyEvent(t_ms, action, None, tuple(sorted(detail.items())))


def _unrecovered(target: TargetFile, net: Network | None, why: str) -> EvidenceRecord:
    custody = CustodyLog()
    now = net.clock.now if net is not None else 0
    custody.events.append(_event(now, "start", path=target.path, reason=target.reason.value))
    custody.events.append(_event(now, "error", step="preconditions", message=why))
    meta = target.meta
    verification = (verify_file({}, meta, whole_file_hash=target.expected_hash) if meta is not None
                    else VerificationResult(Status.PARTIAL, frozenset(), frozenset(), frozenset()))
    custody.events.append(_event(now, "result", status=verification.status.value))
    return EvidenceRecord(target, {}, verification, [], custody, meta)


def validate(req: AcquisitionRequest) -> None:
    if not req.evidence_dir.is_dir():
        raise UsageError(f"evidence directory {req.evidence_dir} does not exist")
    if not req.methods and not req.known_peers:
        raise UsageError("no discovery method enabled and no --known-peer given")
    if req.secret is not None:
        try:
            decode_secret(req.secret)
        except IdentityError as exc:
            raise UsageError(f"--secret: {exc}") from None
    for label, path in (("--memory", req.memory), ("--netlog", req.netlog), ("--network", req.network)):
        if path is not None and not path.is_file():
            raise UsageError(f"{label} {path} does not exist")
    if req.mobile is not None and not req.mobile.is_dir():
        raise UsageError(f"--mobile {req.mobile} does not exist")


def run_acquisition(req: AcquisitionRequest) -> AcquisitionOutcome:
    validate(req)

    # Discovery: gather entry points
    bundle = EntryPointBundle(disk=locate_artifacts(req.evidence_dir, detect_profile(req.evidence_dir)))
    if req.memory is not None:
        bundle.memory = req.memory.read_bytes()
    if req.netlog is not None:
        bundle.network_log = parse_netlog(req.netlog.read_text(encoding="utf-8"))
    if req.mobile is not None:
        bundle.mobile = locate_artifacts(req.mobile, "ios")

    # Investigation
    evidence = analyze_disk(bundle.disk)
    findings = scan_memory(bundle.memory) if bundle.memory is not None else None
    matrix = corroborate(bundle, disk_evidence=evidence, memory_findings=findings)
    targets = identify_targets(evidence)
    if bundle.mobile is not None:
        mobile_evidence = analyze_disk(bundle.mobile)
        seen = {(t.share, t.path) for t in targets}
        targets += [t for t in identify_targets(mobile_evidence) if (t.share, t.path) not in seen]
        for share, manifest in mobile_evidence.manifests.items():
            evidence.manifests.setdefault(share, manifest)

    simulation = find_simulation(req.evidence_dir, req.network)
    net = replay_network(simulation) if simulation is not None and targets else None
    known = [_resolve_peer(net, p) for p in req.known_peers]
    policy = RecoveryPolicy.known_peers(known) if known else RecoveryPolicy()

    # Enumeration and recovery
    records: list[EvidenceRecord] = []
    enumeration: dict[str, list[dict]] = {}
    secrets_used: dict[str, str] = {}
    survey = recovery = None
    if net is not None:
        survey = investigator_node(net, "investigator-survey", SURVEY_ADDRESS, req.seed)
        recovery = investigator_node(net, "investigator-recovery", RECOVERY_ADDRESS, req.seed)
    # Known peers only: no live discovery traffic at all, evidence-based methods still run
    methods = set(req.methods) - LIVE_METHODS if known else set(req.methods)
    if net is None:
        methods -= LIVE_METHODS
    suppressed = sorted(m.value for m in set(req.methods) - methods)
    peer_cache: dict[ShareID, list[PeerRecord]] = {}
    for target in targets:
        if target.share not in peer_cache:
            found = enumerate_peers(target.share, methods, net, survey, evidence)
            if known:
                listed = {r.address: r for r in found}
                found = [listed.get(a, PeerRecord(a, None, None, ("known_peer",))) for a in known]
            peer_cache[target.share] = found
            enumeration[target.share.hex] = [r.to_dict() for r in found]
        peers = peer_cache[target.share]
        secret, origin = _secret_for(target.share, req, evidence, findings)
        if secret is not None:
            secrets_used[target.share.hex] = origin
        if net is None:
            records.append(_unrecovered(target, None, "no live network available"))
        elif secret is None:
            records.append(_unrecovered(target, net, "no secret for this share in any source"))
        else:
            try:
                records.append(recover(target, peers, secret, policy, net, recovery))
            except NoEligiblePeers as exc:
                records.append(_unrecovered(target, net, str(exc)))

    # Verification and report
    root = bundle.disk.root
    case = CaseMetadata(
        case_id=req.case_id or f"case-{req.evidence_dir.resolve().name}",
        evidence_source=req.evidence_dir.resolve().name,
    )
    extra = {
        "investigation": {
            "profile": bundle.disk.profile.value,
            "links": [_relative_link(link.to_dict(), root) for link in evidence.links],
            "parse_errors": {_rel(Path(p), root): e for p, e in sorted(evidence.errors.items())},
            "targets": [t.to_dict() for t in targets],
            "memory": findings.to_dict() if findings is not None else None,
            "secret_sources": secrets_used,
        },
        "enumeration": {
            "methods": sorted(m.value for m in methods),
            "suppressed_methods": suppressed,
            "policy": "KnownPeersOnly" if policy.known_peers_only else "Open",
            "known_peers": known,
            "peers": enumeration,
        },
    }
    report = build_report(records, matrix, case, extra)
    case_dir = write_report(report, req.case_out)

    if not targets:
        code = EXIT_NOTHING
    elif all(r.verification.status is Status.FULL_MATCH for r in records):
        code = EXIT_OK
    else:
        code = EXIT_DEGRADED
    return AcquisitionOutcome(code, report, case_dir, evidence, matrix, targets, net, recovery)


def _rel(path: Path, root: Path) -> str:
    try:
        return path.relative_to(root).as_posix()
    except ValueError:
        return path.name


def _relative_link(d: dict, root: Path) -> dict:
    if d.get("folder"):
        d["folder"] = _rel(Path(d["folder"]), root)
    return d
