import copy
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncforensics.acquisition import (
    CellState,
    EntryPointBundle,
    InsufficientSources,
    Method,
    NoEligiblePeers,
    RecoveryPolicy,
    ReverificationFailed,
    TargetReason,
    Verdict,
    analyze_disk,
    build_report,
    CaseMetadata,
    corroborate,
    enumerate_peers,
    identify_targets,
    load_bundle,
    recover,
    reverify,
    scan_memory,
    verify_report_document,
)
from syncforensics.acquisition.pipeline import investigator_node
from syncforensics.artifacts import detect_profile, locate_artifacts
from syncforensics.identity import AccessLevel, derive_readonly, generate_secret
from syncforensics.integrity import Status
from syncforensics.syncnet import PeerRecord, parse_scenario, run_scenario

from helpers import acquire, poc_doc, simulate


def evidence_of(tree):
    return analyze_disk(locate_artifacts(tree, detect_profile(tree)))


def test_scan_finds_secret_fragment_and_contacts():
    secret = derive_readonly(generate_secret(AccessLevel.MASTER, 5))
    blob = (b"\x00junk" + secret.text.encode() + b"\x00" + secret.text[:40].encode()
            + b"\x0010.0.0.7:3839 " + b"AB" * 20 + b"\x000.0.0.0:3839\x00")
    found = scan_memory(blob)
    assert [(c.text, c.offset) for c in found.secrets] == [(secret.text, 5)]
    assert [f.text for f in found.fragments] == [secret.text[:40]]
    assert found.remote_endpoints == {"10.0.0.7:3839"}
    assert found.remote_peer_ids == {"AB" * 20}
    assert found.listening_ports == {3839}


def test_scan_ignores_letter_noise():
    rng = random.Random(3)
    noise = bytes(rng.choice(b"ABCDEFGHIJKLMNOPQRSTUVWXYZ234567") for _ in range(4000))
    found = scan_memory(noise.replace(b"I", b"J"))
    assert found.secrets == []


def test_disk_analysis_links_are_consistent(poc_tree):
    ev = evidence_of(poc_tree / "ComputerB")
    (link,) = ev.links
    assert link.consistent and link.secret.access_level is AccessLevel.READ_ONLY
    assert ev.secret_for(link.share_id) == link.secret
    assert not ev.errors


def test_disk_analysis_flags_tampered_sync_id(poc_tree, tmp_path):
    import shutil

    tree = tmp_path / "B"
    shutil.copytree(poc_tree / "ComputerB", tree)
    (tree / "Documents" / "evidence" / ".SyncID").write_bytes(b"\x01" * 20)
    ev = evidence_of(tree)
    assert any(not link.consistent for link in ev.links)


def test_targets(poc_tree):
    (b_target,) = identify_targets(evidence_of(poc_tree / "ComputerB"))
    assert (b_target.path, b_target.reason) == ("badfilethree.txt", TargetReason.INVALIDATED)
    (a_target,) = identify_targets(evidence_of(poc_tree / "ComputerA"))
    assert (a_target.path, a_target.reason) == ("badfileone.txt", TargetReason.DELETED_LOCALLY)


def test_corroboration_on_poc(poc_tree):
    cap = poc_tree / "captures" / "ComputerB"
    bundle = load_bundle(poc_tree / "ComputerB", cap / "memory.bin", cap / "netlog.jsonl")
    matrix = corroborate(bundle)
    assert matrix.verdicts["Secret"] is Verdict.AGREE
    assert matrix.verdicts["ShareID"] is Verdict.AGREE
    assert matrix.cell("Secret", "Network").state is CellState.NOT_APPLICABLE
    assert matrix.corroborated("PeerID")


def test_corroboration_reports_conflict(poc_tree):
    bundle = load_bundle(poc_tree / "ComputerB", poc_tree / "captures" / "ComputerA" / "memory.bin")
    matrix = corroborate(bundle)
    assert matrix.verdicts["Secret"] is Verdict.CONFLICT
    assert set(matrix.conflicts["Secret"]) == {"RAM", "sync.dat"}


def test_corroboration_needs_an_entry_point():
    with pytest.raises(InsufficientSources):
        corroborate(EntryPointBundle())


def test_offline_enumeration_uses_evidence_only(poc_tree):
    ev = evidence_of(poc_tree / "ComputerB")
    share = ev.links[0].share_id
    found = enumerate_peers(share, {Method.SYNC_LOG, Method.KNOWN_HOSTS}, evidence=ev)
    assert [(r.address, r.last_seen) for r in found] == [("10.0.1.10:3839", None)]
    with pytest.raises(ValueError):
        enumerate_peers(share, {Method.TRACKER}, evidence=ev)


def test_method_parsing():
    assert Method.parse("none") == set()
    assert Method.parse("all") == set(Method)
    assert Method.parse("tracker, dht") == {Method.TRACKER, Method.DHT}
    with pytest.raises(ValueError):
        Method.parse("carrier-pigeon")


def _poc_recovery(poc_tree):
    sim = run_scenario(parse_scenario(poc_doc()))
    ev = evidence_of(poc_tree / "ComputerB")
    (target,) = identify_targets(ev)
    node = investigator_node(sim.net, "lab", "192.168.50.9:3839", 0)
    return sim, ev, target, node


def test_recover_open_policy(poc_tree):
    sim, ev, target, node = _poc_recovery(poc_tree)
    peers = sim.net.discover(node, target.share, {"tracker", "dht"})
    record = recover(target, peers, ev.secret_for(target.share), RecoveryPolicy(), sim.net, node)
    assert record.status is Status.FULL_MATCH
    assert record.content == sim.node("ComputerA").share(target.share).content["badfilethree.txt"]


def test_recover_refuses_empty_known_list(poc_tree):
    sim, ev, target, node = _poc_recovery(poc_tree)
    with pytest.raises(NoEligiblePeers):
        recover(target, [PeerRecord("10.0.1.10:3839")], ev.secret_for(target.share),
                RecoveryPolicy.known_peers(["1.1.1.1:1"]), sim.net, node)


def test_recover_skips_peer_with_other_version(tmp_path):
    doc = poc_doc()
    doc["timeline"].append({"t_ms": 200000, "action": "modify_offline", "node": "ComputerA", "share": "evidence",
                            "path": "badfilethree.txt", "content": {"size": 152, "seed": "edited"}})
    out = tmp_path / "sim"
    simulate(doc, out)
    outcome = acquire(out, "ComputerB", tmp_path / "cases", known=["ComputerA"])
    (record,) = outcome.report.records
    assert record.status is Status.PARTIAL and not record.pieces
    (event,) = record.custody_log.of("eligibility")
    assert dict(event.detail)["eligible"] is False
    assert outcome.exit_code == 3


def test_report_digest_and_tamper_checks(poc_tree):
    sim, ev, target, node = _poc_recovery(poc_tree)
    record = recover(target, [PeerRecord("10.0.1.10:3839")], ev.secret_for(target.share),
                     RecoveryPolicy.known_peers(["10.0.1.10:3839"]), sim.net, node)
    report = build_report([record], None, CaseMetadata("c1"))
    assert report.digest == build_report([record], None, CaseMetadata("c1")).digest
    assert verify_report_document(report.document)
    edited = copy.deepcopy(report.document)
    edited["records"][0]["verification"]["status"] = "PARTIAL"
    assert not verify_report_document(edited)
    record.pieces[0] = b"X" * len(record.pieces[0])
    with pytest.raises(ReverificationFailed):
        reverify(record)


def test_acquire_with_source_offline(tmp_path):
    doc = poc_doc()
    doc["timeline"].append({"t_ms": 200000, "action": "go_offline", "node": "ComputerA"})
    out = tmp_path / "sim"
    simulate(doc, out)
    outcome = acquire(out, "ComputerB", tmp_path / "cases", known=["ComputerA"])
    assert outcome.exit_code == 3
    (record,) = outcome.report.records
    assert record.status is Status.PARTIAL
    assert record.verification.missing_pieces == {0}
    assert record.custody_log.of("error")


def test_acquire_nothing_to_do(tmp_path):
    (tmp_path / "empty").mkdir()
    outcome = acquire(tmp_path, "empty", tmp_path / "cases", known=["10.0.0.1:1"], captures=False)
    assert outcome.exit_code == 4 and outcome.targets == []


def test_acquire_secret_from_memory_only(poc_tree, tmp_path):
    import shutil

    tree = tmp_path / "sim"
    shutil.copytree(poc_tree, tree)
    for p in tree.glob("ComputerB/AppData/Roaming/BitTorrent Sync/sync.dat"):
        p.unlink()
    outcome = acquire(tree, "ComputerB", tmp_path / "cases", known=["ComputerA"])
    assert outcome.exit_code == 0
    assert outcome.report.document["investigation"]["secret_sources"]
    assert next(iter(outcome.report.document["investigation"]["secret_sources"].values())).startswith("memory")


def test_report_files_written(poc_tree, tmp_path):
    outcome = acquire(poc_tree, "ComputerB", tmp_path / "cases", known=["ComputerA"])
    doc = json.loads((outcome.case_dir / "report.json").read_text())
    assert verify_report_document(doc)
    recovered = list((outcome.case_dir / "recovered").rglob("badfilethree.txt"))
    assert len(recovered) == 1
    assert (outcome.case_dir / "report.txt").read_text().count("FULL_MATCH") == 1


@settings(max_examples=150)
@given(st.integers(min_value=0, max_value=10_000), st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ234567",
                                                           min_size=1, max_size=12))
def test_scan_ignores_windows_shifted_into_trailing_letters(seed, tail):
    secret = derive_readonly(generate_secret(AccessLevel.MASTER, seed))
    found = scan_memory(b"\x00" + secret.text.encode() + tail.encode() + b"\x00")
    assert [(c.secret, c.offset) for c in found.secrets] == [(secret, 1)]
