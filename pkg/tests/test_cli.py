import json
from pathlib import Path

import pytest

from syncforensics.cli import main
from syncforensics.identity import AccessLevel, derive_readonly, encode_secret, generate_secret

from helpers import poc_doc


@pytest.fixture(scope="module")
def sim_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "sim"
    assert main(["simulate", "--out", str(out)]) == 0
    return out


def app_dir(sim_out):
    return sim_out / "ComputerB" / "AppData" / "Roaming" / "BitTorrent Sync"


def test_simulate_writes_trees_and_digest(sim_out, tmp_path, capsys):
    assert (sim_out / "ComputerA" / ".sync" / "sync.dat").is_file()
    assert (sim_out / "simulation.json").is_file()
    first = json.loads((sim_out / "simulation.json").read_text())["trace_digest"]
    assert main(["simulate", "--out", str(tmp_path / "again"), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["trace_digest"] == first


def test_simulate_bad_scenario(tmp_path, capsys):
    doc = poc_doc()
    doc["timeline"].append({"t_ms": 999999, "action": "sync", "node": "Nobody", "share": "evidence"})
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["simulate", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "timeline[3].node" in capsys.readouterr().err


def test_inspect_sync_dat(sim_out, capsys):
    assert main(["inspect", str(app_dir(sim_out) / "sync.dat")]) == 0
    out = capsys.readouterr().out
    for key in ("use_dht", "use_lan_broadcast", "use_relay", "use_tracker", "known_hosts", "derived ShareID"):
        assert key in out


def test_inspect_sync_id_and_manifest(sim_out, capsys):
    assert main(["inspect", str(sim_out / "ComputerB" / "Documents" / "evidence" / ".SyncID")]) == 0
    share_hex = capsys.readouterr().out.strip().splitlines()[-1]
    assert len(share_hex) == 40
    assert main(["inspect", "--format", "json", str(app_dir(sim_out) / f"{share_hex}.db")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kind"] == "manifest"
    assert {f["path"] for f in doc["content"]["files"]} == {"badfiletwo.txt", "badfilethree.txt"}


def test_inspect_truncated_manifest(sim_out, tmp_path, capsys):
    db = next(app_dir(sim_out).glob("*.db"))
    cut = tmp_path / db.name
    cut.write_bytes(db.read_bytes()[:-7])
    assert main(["inspect", str(cut)]) == 1
    assert "at byte" in capsys.readouterr().err


def test_inspect_unknown_kind(tmp_path):
    junk = tmp_path / "notes.bin"
    junk.write_bytes(b"hello there")
    assert main(["inspect", str(junk)]) == 2


def test_shareid(capsys):
    master = generate_secret(AccessLevel.MASTER, 8)
    assert main(["shareid", encode_secret(master)]) == 0
    a = capsys.readouterr().out.strip()
    assert main(["shareid", encode_secret(derive_readonly(master))]) == 0
    assert capsys.readouterr().out.strip() == a
    assert main(["shareid", encode_secret(master)[:52]]) == 1


def test_acquire_poc(sim_out, tmp_path, capsys):
    code = main(["acquire", str(sim_out / "ComputerB"), str(tmp_path / "cases"), "--known-peer", "ComputerA",
                 "--methods", "none", "--format", "json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["summary"]["full_match"] == 1


def test_acquire_flag_errors(sim_out, tmp_path):
    base = ["acquire", str(sim_out / "ComputerB"), str(tmp_path / "c")]
    assert main(base + ["--methods", "none"]) == 2
    assert main(base + ["--methods", "smoke-signals"]) == 2
    assert main(base + ["--secret", "XYZ"]) == 2
    assert main(["acquire", str(tmp_path / "missing")]) == 2


def test_verify(sim_out, tmp_path):
    source = sim_out / "ComputerA" / "evidence" / "badfilethree.txt"
    db = str(next((sim_out / "ComputerA" / ".sync").glob("*.db")))
    assert main(["verify", str(source), "--manifest", db]) == 0
    flipped = tmp_path / "badfilethree.txt"
    data = bytearray(source.read_bytes())
    data[10] ^= 1
    flipped.write_bytes(bytes(data))
    assert main(["verify", str(flipped), "--manifest", db]) == 3
    assert main(["verify", str(source), "--manifest", db, "--path", "nothere.txt"]) == 2


def test_report_detects_tampering(sim_out, tmp_path):
    cases = tmp_path / "cases"
    main(["acquire", str(sim_out / "ComputerB"), str(cases), "--known-peer", "ComputerA", "--case-id", "k"])
    assert main(["report", str(cases / "k")]) == 0
    path = cases / "k" / "report.json"
    doc = json.loads(path.read_text())
    doc["case"]["examiner"] = "someone else"
    path.write_text(json.dumps(doc))
    assert main(["report", str(path)]) == 3


def test_usage_error_exit_code():
    assert main([]) == 2
    assert main(["--help"]) == 0


def test_global_flags_before_or_after_subcommand(capsys):
    secret = encode_secret(generate_secret(AccessLevel.MASTER, 8))
    assert main(["--format", "json", "shareid", secret]) == 0
    before = json.loads(capsys.readouterr().out)
    assert main(["shareid", secret, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == before
