from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncforensics import bencode
from syncforensics.artifacts import (
    AggregateMismatch,
    FileEntry,
    FileMeta,
    HashLengthError,
    LogEvent,
    LogEventKind,
    OSProfile,
    PieceCountMismatch,
    RangeError,
    SchemaViolation,
    Settings,
    ShareManifest,
    SyncDatConfig,
    detect_profile,
    dump_sync_dat,
    locate_artifacts,
    manifest_filename,
    parse_manifest,
    parse_settings,
    parse_sync_dat,
    parse_sync_id,
    parse_sync_log,
    read_sync_dat,
    write_manifest,
    write_settings,
    write_sync_dat,
    write_sync_id,
    write_sync_log,
)
from syncforensics.identity import AccessLevel, PeerID, ShareID, derive_readonly, generate_secret
from syncforensics.integrity import index_file

SAMPLE_MANIFEST = {
    "badfileone.txt": (19, "58B47FB1467AEB0BEFE6FE1BD6255A5C24B552A0"),
    "badfiletwo.txt": (124, "B47C7586BC82B27A8441A8E4C07F77874CC67557"),
    "badfilethree.txt": (152, "3598492B4D1CE5FAFD9EF76E8FA54C8F55E0716A"),
}


def sample_bytes() -> bytes:
    return resources.files("syncforensics.data").joinpath("sample_manifest.db").read_bytes()


def manifest_with(*contents: bytes) -> ShareManifest:
    m = ShareManifest()
    for i, content in enumerate(contents):
        idx = index_file(content, 64)
        path = f"dir/file{i}.bin"
        m.put(FileEntry(path, len(content), 1400000000 + i, idx.whole_file_hash), FileMeta.from_index(path, idx))
    return m


def test_sample_manifest_fixture():
    m = parse_manifest(sample_bytes())
    got = {e.path: (e.size, e.hash20.hex().upper()) for e in m.files}
    assert got == SAMPLE_MANIFEST


def test_manifest_round_trip_is_byte_exact():
    data = sample_bytes()
    assert write_manifest(parse_manifest(data)) == data


def test_manifest_unknown_keys_survive():
    m = manifest_with(b"abc")
    doc = bencode.decode(write_manifest(m))
    doc[b"zz_vendor"] = b"kept"
    doc[b"files"][0][b"color"] = 3
    data = bencode.encode(doc)
    assert write_manifest(parse_manifest(data)) == data


def test_manifest_rejects_short_hash():
    doc = bencode.decode(write_manifest(manifest_with(b"abc")))
    doc[b"files"][0][b"hash20"] = b"\x00" * 19
    with pytest.raises(HashLengthError):
        parse_manifest(bencode.encode(doc))


def test_manifest_rejects_piece_count_mismatch():
    doc = bencode.decode(write_manifest(manifest_with(b"a" * 200)))
    doc[b"meta"][0][b"pieces"] = doc[b"meta"][0][b"pieces"][:20]
    with pytest.raises(PieceCountMismatch):
        parse_manifest(bencode.encode(doc))


def test_manifest_rejects_bad_aggregate():
    doc = bencode.decode(write_manifest(manifest_with(b"a" * 200)))
    doc[b"meta"][0][b"hash"] = b"\x01" * 20
    with pytest.raises(AggregateMismatch):
        parse_manifest(bencode.encode(doc))


def test_truncated_manifest_reports_offset():
    data = write_manifest(manifest_with(b"abc"))
    with pytest.raises(bencode.TruncatedInput) as info:
        parse_manifest(data[:-5])
    assert "at byte" in str(info.value)


def test_deleted_entry_keeps_hash_and_needs_no_meta():
    m = manifest_with(b"gone")
    entry = m.files[0]
    m.put(FileEntry(entry.path, entry.size, entry.mtime, entry.hash20, state=2), None)
    back = parse_manifest(write_manifest(m))
    assert back.files[0].state == 2 and back.files[0].hash20 == entry.hash20
    assert not back.files[0].is_live


def test_invalidated_flag_must_be_binary():
    doc = bencode.decode(write_manifest(manifest_with(b"abc")))
    doc[b"files"][0][b"invalidated"] = 2
    with pytest.raises(SchemaViolation):
        parse_manifest(bencode.encode(doc))


def test_manifest_filename():
    assert manifest_filename(ShareID(b"\xab" * 20)) == "AB" * 20 + ".db"


@settings(max_examples=40)
@given(st.lists(st.binary(max_size=300), max_size=5))
def test_manifest_round_trip_property(contents):
    m = manifest_with(*contents)
    assert parse_manifest(write_manifest(m)) == m


def _config(**kw) -> SyncDatConfig:
    secret = derive_readonly(generate_secret(AccessLevel.MASTER, 4))
    return SyncDatConfig(path="C:\\Users\\x\\share", secret=secret, **kw)


def test_sync_dat_round_trip_and_extras():
    cfg = _config(known_hosts=["10.0.0.1:3839"], use_dht=0)
    cfg.record_peer(PeerID(b"\x11" * 20), 1400000100)
    doc = bencode.decode(write_sync_dat(cfg))
    doc[b"future_flag"] = 1
    data = bencode.encode(doc)
    back = parse_sync_dat(data)
    assert back.known_hosts == ["10.0.0.1:3839"] and back.use_dht == 0
    assert back.peers[0].last_sync_completed == 1400000100
    assert write_sync_dat(back) == data


def test_sync_dat_flags_must_be_binary():
    doc = bencode.decode(write_sync_dat(_config()))
    doc[b"use_tracker"] = 7
    with pytest.raises(SchemaViolation):
        parse_sync_dat(bencode.encode(doc))


def test_sync_dat_bad_secret():
    doc = bencode.decode(write_sync_dat(_config()))
    doc[b"secret"] = b"NOTASECRET"
    with pytest.raises(SchemaViolation):
        parse_sync_dat(bencode.encode(doc))


def test_whole_sync_dat():
    data = dump_sync_dat(read_sync_dat(write_sync_dat(_config())))
    assert len(read_sync_dat(data).folders) == 1


def test_sync_id_round_trip():
    sid = ShareID(bytes(range(20)))
    assert parse_sync_id(write_sync_id(sid)) == sid
    with pytest.raises(Exception):
        parse_sync_id(b"\x00" * 21)


def test_settings_defaults_and_range():
    s = parse_settings(write_settings(Settings()))
    assert (s.sync_archive_enabled, s.archive_days, s.piece_len) == (1, 30, 32768)
    with pytest.raises(RangeError):
        Settings(piece_len=0)


def test_sync_log_round_trip_and_warnings():
    events = [
        LogEvent(1400000001, LogEventKind.PEER_CONNECT, PeerID(b"\x22" * 20), "10.0.0.2:3839"),
        LogEvent(1400000002, LogEventKind.DOWNLOAD, path="my docs/a b.txt", share=ShareID(b"\x01" * 20)),
    ]
    text = write_sync_log(events)
    assert parse_sync_log(text).events == events
    log = parse_sync_log(text + "garbage line\n1399999999 UPLOAD path=x\n")
    assert [w.line_no for w in log.warnings] == [3, 4]
    assert len(log.events) == 3


def test_locate_exported_trees(poc_tree):
    b = locate_artifacts(poc_tree / "ComputerB", detect_profile(poc_tree / "ComputerB"))
    assert b.profile is OSProfile.WINDOWS
    assert b.sync_dat and b.sync_log and b.settings_dat
    (share,) = b.shares
    assert share.manifest is not None and share.sync_id is not None
    assert share.declared_path.startswith("C:\\Users\\ComputerB")
    a = locate_artifacts(poc_tree / "ComputerA", "linux")
    assert detect_profile(poc_tree / "ComputerA") is OSProfile.LINUX
    assert a.shares[0].share_id == share.share_id


def test_poc_manifest_flags(poc_tree):
    b = locate_artifacts(poc_tree / "ComputerB", "windows")
    m = parse_manifest(b.read(b.shares[0].manifest))
    three = m.entry("badfilethree.txt")
    assert (three.state, three.invalidated) == (1, 1)
    assert m.entry("badfileone.txt") is None
    a = locate_artifacts(poc_tree / "ComputerA", "linux")
    ma = parse_manifest(a.read(a.shares[0].manifest))
    assert ma.entry("badfileone.txt").state == 2
    assert ma.entry("badfilethree.txt").hash20 == three.hash20
