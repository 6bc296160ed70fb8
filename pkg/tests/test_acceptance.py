"""Acceptance criteria, one test each, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import contextlib
import hashlib
import json
import random
import shutil
import sys
from importlib import resources

import pytest

from syncforensics import bencode
from syncforensics.acquisition import RECOVERABILITY, CellState, Method, Verdict, corroborate, load_bundle, scan_memory
from syncforensics.acquisition.pipeline import RECOVERY_ADDRESS, SURVEY_ADDRESS
from syncforensics.artifacts import parse_manifest
from syncforensics.cli import main as cli
from syncforensics.identity import (
    AccessLevel,
    decode_secret,
    derive_readonly,
    derive_share_id,
    encode_secret,
    generate_secret,
)
from syncforensics.integrity import Status, index_file
from syncforensics.syncnet import Network, SyncNode
from syncforensics.identity import generate_peer_id

from helpers import acquire, byzantine_doc, poc_doc, simulate, three_piece_doc

MIN = 60_000


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number: int, title: str):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"\nCRITERION {number:>2} FAIL  {title}")
            raise
        with capsys.disabled():
            print(f"\nCRITERION {number:>2} PASS  {title}")

    return run


# 1 -----------------------------------------------------------------------

def test_c01_poc_end_to_end(criterion, tmp_path):
    with criterion(1, "PoC end-to-end recovery, FULL_MATCH, deterministic over 3 runs"):
        digests = []
        for run in range(3):
            base = tmp_path / f"run{run}"
            assert cli(["simulate", "--out", str(base / "sim")]) == 0
            sim = base / "sim"
            code = cli(["acquire", str(sim / "ComputerB"), str(base / "cases"), "--known-peer", "ComputerA",
                        "--methods", "none",
                        "--memory", str(sim / "captures" / "ComputerB" / "memory.bin"),
                        "--netlog", str(sim / "captures" / "ComputerB" / "netlog.jsonl")])
            assert code == 0
            (case,) = (base / "cases").iterdir()
            doc = json.loads((case / "report.json").read_text())
            (record,) = doc["records"]
            assert record["target"]["path"] == "badfilethree.txt"
            assert record["verification"]["status"] == "FULL_MATCH"
            (recovered,) = (case / "recovered").rglob("badfilethree.txt")
            original = (sim / "ComputerA" / "evidence" / "badfilethree.txt").read_bytes()
            assert recovered.read_bytes() == original
            assert hashlib.sha1(recovered.read_bytes()).hexdigest().upper() == record["target"]["expected_hash"]
            digests.append(doc["digest"])
        assert len(set(digests)) == 1


# 2 -----------------------------------------------------------------------

SAMPLE_MANIFEST = [
    ("badfileone.txt", 19, "58B47FB1467AEB0BEFE6FE1BD6255A5C24B552A0"),
    ("badfiletwo.txt", 124, "B47C7586BC82B27A8441A8E4C07F77874CC67557"),
    ("badfilethree.txt", 152, "3598492B4D1CE5FAFD9EF76E8FA54C8F55E0716A"),
]


def test_c02_sample_manifest(criterion):
    with criterion(2, "Sample manifest fixture parses to the exact names, sizes and hashes"):
        data = resources.files("syncforensics.data").joinpath("sample_manifest.db").read_bytes()
        m = parse_manifest(data)
        got = sorted((e.path, e.size, e.hash20.hex().upper()) for e in m.files)
        assert got == sorted(SAMPLE_MANIFEST)


# 3 -----------------------------------------------------------------------

def oracle_aggregate(content: bytes, piece_len: int) -> bytes:
    concatenated = b"".join(hashlib.sha1(content[i:i + piece_len]).digest()
                            for i in range(0, len(content), piece_len))
    return hashlib.sha1(concatenated).digest()


def test_c03_aggregate_oracle(criterion):
    with criterion(3, "Piece aggregate equals concatenate-then-SHA1 oracle"):
        rng = random.Random(3)
        for size in (0, 1, 32767, 32768, 32769, 163857):
            content = rng.randbytes(size)
            assert index_file(content, 32768).aggregate_hash == oracle_aggregate(content, 32768)
            if 0 < size <= 32768:
                assert index_file(content, 32768).aggregate_hash == \
                    hashlib.sha1(hashlib.sha1(content).digest()).digest()


# 4 -----------------------------------------------------------------------

def random_bvalue(rng: random.Random, depth: int = 0):
    kind = rng.randrange(4 if depth < 4 else 2)
    if kind == 0:
        return rng.randint(-(2**63), 2**63 - 1) if rng.random() < 0.2 else rng.randint(-1000, 1000)
    if kind == 1:
        return rng.randbytes(rng.randrange(0, 24))
    if kind == 2:
        return [random_bvalue(rng, depth + 1) for _ in range(rng.randrange(0, 5))]
    return {rng.randbytes(rng.randrange(0, 6)): random_bvalue(rng, depth + 1) for _ in range(rng.randrange(0, 5))}


def unsorted_dict_bytes(rng: random.Random) -> bytes:
    keys = sorted({rng.randbytes(rng.randrange(1, 6)) for _ in range(rng.randrange(2, 6))})
    while len(keys) < 2:
        keys.append(keys[-1] + b"z")
    keys = sorted(set(keys))
    shuffled = keys[:]
    while shuffled == keys:
        rng.shuffle(shuffled)
    return b"d" + b"".join(bencode.encode(k) + bencode.encode(rng.randint(0, 9)) for k in shuffled) + b"e"


def test_c04_bencode_properties(criterion):
    with criterion(4, "Bencode: 10,000 round trips, canonical fixpoint, strict rejection corpora"):
        rng = random.Random(4)
        for _ in range(10_000):
            value = random_bvalue(rng)
            encoded = bencode.encode(value)
            assert bencode.decode(encoded) == value
            assert bencode.encode(bencode.decode(encoded)) == encoded
        rejected = 0
        corpus = [unsorted_dict_bytes(rng) for _ in range(1000)]
        corpus += [bencode.encode(random_bvalue(rng)) + rng.randbytes(rng.randrange(1, 8)) for _ in range(1000)]
        for data in corpus:
            try:
                bencode.decode(data)
            except bencode.BencodeError:
                rejected += 1
        assert rejected == len(corpus)


# 5 -----------------------------------------------------------------------

def test_c05_churn(criterion):
    with criterion(5, "Churn: present at 29 min, absent at 31 min from tracker and DHT"):
        net = Network(seed=5, ttl_ms=30 * MIN)
        master = generate_secret(AccessLevel.MASTER, 5)
        share = derive_share_id(master)
        nodes = {}
        for i, name in enumerate(("Announcer", "Store1", "Store2", "Asker")):
            node = SyncNode(name, f"10.5.0.{i + 1}:3839", generate_peer_id(random.Random(name)),
                            lan_domain=f"lan{i}", auto_checkin=False)
            node.add_share("s", master if name == "Announcer" else derive_readonly(master))
            nodes[name] = net.add_node(node)
        announcer, asker = nodes["Announcer"], nodes["Asker"]
        net.tracker_announce(announcer, share)
        net.dht_announce(announcer, share)
        start = 0

        def seen(method):
            if method == "tracker":
                found = net.tracker_announce(asker, share, register=False)
            else:
                found = net.dht_get_peers(asker, share)
            return announcer.address in {r.address for r in found}

        net.clock.run_until(start + 29 * MIN)
        assert seen("tracker") and seen("dht")
        net.clock.run_until(start + 31 * MIN)
        assert not seen("tracker") and not seen("dht")


# 6 -----------------------------------------------------------------------

def test_c06_partial_recovery(criterion, tmp_path):
    with criterion(6, "Partial recovery: PARTIAL, missing {1}, pieces 0 and 2 verified, exit 3"):
        simulate(three_piece_doc(), tmp_path / "sim")
        outcome = acquire(tmp_path / "sim", "Suspect", tmp_path / "cases", known=["Partial", "Source"],
                          methods=set())
        assert outcome.exit_code == 3
        (record,) = outcome.report.records
        v = record.verification
        assert v.status is Status.PARTIAL
        assert v.missing_pieces == {1}
        assert v.verified_pieces == {0, 2}
        accepted = {dict(e.detail)["index"] for e in record.custody_log.of("verify") if dict(e.detail)["ok"]}
        assert accepted == {0, 2}


# 7 -----------------------------------------------------------------------

def test_c07_corruption_retry(criterion, tmp_path):
    with criterion(7, "Corruption retry: one failed verification, refetch, FULL_MATCH"):
        simulate(byzantine_doc(), tmp_path / "sim")
        outcome = acquire(tmp_path / "sim", "Suspect", tmp_path / "cases", known=["Liar", "Honest"],
                          methods=set())
        (record,) = outcome.report.records
        assert record.verification.status is Status.FULL_MATCH
        events = record.custody_log.events
        failed = [i for i, e in enumerate(events) if e.action == "verify" and not dict(e.detail)["ok"]]
        assert len(failed) == 1
        bad = failed[0]
        index = dict(events[bad].detail)["index"]
        assert events[bad + 1].action == "discard"
        refetch = events[bad + 2]
        assert refetch.action == "request" and dict(refetch.detail) == {
            "index": index, "kind": "PIECE_REQUEST", "path": "plans.pdf"}
        later = [e for e in events[bad + 2:] if e.action == "verify" and dict(e.detail)["index"] == index]
        assert dict(later[0].detail)["ok"]
        assert outcome.exit_code == 0


# 8 -----------------------------------------------------------------------

def containment_doc(seed: int) -> dict:
    doc = poc_doc()
    doc["seed"] = seed
    doc["nodes"].append({"name": "ComputerC", "address": "10.0.3.30:3839", "lan": "lan-b", "os": "macos",
                         "shares": [{"share": "evidence", "access": "readonly", "files": "all"}]})
    return doc


def test_c08_policy_containment(criterion, tmp_path):
    with criterion(8, "KnownPeersOnly: zero messages outside the list over 100 seeded runs"):
        investigators = {SURVEY_ADDRESS, RECOVERY_ADDRESS}
        for seed in range(100):
            base = tmp_path / f"s{seed}"
            sim = simulate(containment_doc(seed), base / "sim")
            allowed = {sim.node("ComputerA").address}
            outcome = acquire(base / "sim", "ComputerB", base / "cases", known=["ComputerA"],
                              methods=set(Method), captures=False, seed=seed)
            sent = [t for t in outcome.net.trace if t.src in investigators]
            assert sent, "the investigator never contacted anyone"
            outside = [t for t in sent if t.dst not in allowed]
            assert outside == [], f"seed {seed}: {outside[:3]}"
            assert outcome.exit_code == 0
            shutil.rmtree(base)


# 9 -----------------------------------------------------------------------

def test_c09_corroboration_matrix(criterion, poc_tree):
    with criterion(9, "Corroboration matrix follows the recoverability matrix; Secret from RAM and sync.dat AGREE"):
        cap = poc_tree / "captures" / "ComputerB"
        matrix = corroborate(load_bundle(poc_tree / "ComputerB", cap / "memory.bin", cap / "netlog.jsonl"))
        sources = list(matrix.cells["ShareID"])
        for item, marks in RECOVERABILITY.items():
            for source, mark in zip(sources, marks):
                state = matrix.cell(item, source).state
                if mark == "R":
                    assert state is CellState.FOUND, (item, source)
                elif mark == "":
                    assert state is CellState.NOT_APPLICABLE, (item, source)
        assert matrix.verdicts["Secret"] is Verdict.AGREE
        assert matrix.cell("Secret", "RAM").values == matrix.cell("Secret", "sync.dat").values


# 10 ----------------------------------------------------------------------

def test_c10_identity_invariants(criterion):
    with criterion(10, "Identity invariants over 1,000 secrets; planted secret found in 50 noise blobs"):
        for seed in range(1000):
            master = generate_secret(AccessLevel.MASTER, seed)
            readonly = derive_readonly(master)
            assert derive_share_id(master) == derive_share_id(readonly)
            assert decode_secret(encode_secret(master)) == master
            assert decode_secret(encode_secret(readonly)) == readonly
        for seed in range(50):
            rng = random.Random(f"noise:{seed}")
            blob = bytearray(rng.randbytes(1 << 20))
            secret = derive_readonly(generate_secret(AccessLevel.MASTER, rng))
            offset = rng.randrange(0, len(blob) - 53)
            blob[offset:offset + 53] = secret.text.encode()
            found = scan_memory(bytes(blob))
            assert [(c.secret, c.offset) for c in found.secrets] == [(secret, offset)]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
