import copy
import random

import pytest

from syncforensics.artifacts import STATE_DELETED, Settings
from syncforensics.identity import AccessLevel, derive_readonly, derive_share_id, generate_peer_id, generate_secret
from syncforensics.syncnet import (
    DHT_K,
    AuthFailed,
    CheckinRegistry,
    Network,
    PeerRecord,
    ScenarioError,
    SimClock,
    SyncNode,
    TrackerState,
    memory_image,
    parse_scenario,
    run_scenario,
    xor_closest,
)
from syncforensics.syncnet.transport import LoopbackTransport

from helpers import poc_doc

MIN = 60_000


def make_net(*specs, seed=1, **kw):
    """specs: (name, address, lan, access) tuples sharing one master secret."""
    net = Network(seed=seed, **kw)
    master = generate_secret(AccessLevel.MASTER, random.Random(f"s{seed}"))
    nodes = []
    for name, address, lan, access in specs:
        node = SyncNode(name, address, generate_peer_id(random.Random(name)), lan_domain=lan,
                        auto_checkin=False)
        node.add_share("s", master if access == "master" else derive_readonly(master))
        net.add_node(node)
        nodes.append(node)
    return net, derive_share_id(master), nodes


def test_clock_orders_by_time_then_insertion():
    clock, seen = SimClock(), []
    clock.schedule(5, seen.append, "b")
    clock.schedule(1, seen.append, "a")
    clock.schedule(5, seen.append, "c")
    cancelled = clock.schedule(3, seen.append, "x")
    clock.cancel(cancelled)
    clock.run_until(10)
    assert seen == ["a", "b", "c"] and clock.now == 10
    with pytest.raises(ValueError):
        clock.schedule(-1, seen.append, "late")


def test_registry_expires_strictly_after_ttl():
    reg = CheckinRegistry(ttl_ms=30 * MIN)
    sid = derive_share_id(generate_secret(AccessLevel.MASTER, 1))
    pid = generate_peer_id(1)
    reg.register(sid, pid, "1.2.3.4:1", now=0)
    assert reg.live(sid, 30 * MIN)
    assert not reg.live(sid, 30 * MIN + 1)
    reg.expire(30 * MIN + 1)
    assert reg.registry == {}


def test_tracker_excludes_the_asker():
    tracker = TrackerState(ttl_ms=MIN)
    sid = derive_share_id(generate_secret(AccessLevel.MASTER, 1))
    a, b = PeerRecord("a:1", generate_peer_id(1)), PeerRecord("b:1", generate_peer_id(2))
    assert tracker.announce(sid, a, 0) == []
    assert [r.address for r in tracker.announce(sid, b, 10)] == ["a:1"]
    assert [r.address for r in tracker.announce(sid, PeerRecord("c:1", None), 20, register=False)] == ["a:1", "b:1"]


def test_xor_closest_picks_k():
    ids = [bytes([i]) * 20 for i in range(10)]
    assert xor_closest(bytes([3]) * 20, ids) == [bytes([3]) * 20, bytes([2]) * 20]
    assert DHT_K == 2


def test_dht_storage_uses_online_nodes_only():
    net, sid, (a, b, c) = make_net(("A", "10.0.0.1:1", "x", "master"), ("B", "10.0.0.2:1", "y", "readonly"),
                                   ("C", "10.0.0.3:1", "z", "readonly"))
    first = net.dht_storage_nodes(sid)
    net.set_online(first[0], False)
    assert first[0] not in net.dht_storage_nodes(sid)


def test_multicast_stays_on_the_lan():
    net, sid, (a, b, c) = make_net(("A", "10.0.0.1:1", "lan1", "master"), ("B", "10.0.0.2:1", "lan1", "readonly"),
                                   ("C", "10.0.9.3:1", "lan2", "readonly"))
    assert [r.address for r in net.multicast_ping(b, sid)] == [a.address]


def test_tracker_and_dht_discovery_across_lans():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "lan1", "master"), ("B", "10.0.9.2:1", "lan2", "readonly"))
    net.tracker_announce(a, sid)
    net.dht_announce(a, sid)
    found = net.discover(b, sid, {"tracker", "dht", "multicast"})
    assert [(r.address, sorted(r.sources)) for r in found] == [(a.address, ["dht", "tracker"])]


def test_wrong_secret_fails_auth():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "", "master"), ("B", "10.0.0.2:1", "", "readonly"))
    other = derive_readonly(generate_secret(AccessLevel.MASTER, 999))
    with pytest.raises(AuthFailed):
        net.session_handshake(b, a.address, sid, other)


def test_sync_pulls_files_and_honours_tombstones():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "l", "master"), ("B", "10.0.0.2:1", "l", "readonly"))
    a.add_file(net, sid, "one.txt", b"1" * 50)
    a.add_file(net, sid, "two.txt", b"2" * 70)
    report = net.node_sync(b, sid)
    assert report.downloaded == ["one.txt", "two.txt"]
    assert b.share(sid).content["two.txt"] == b"2" * 70
    net.clock.advance(5000)
    a.delete_file(net, sid, "one.txt")
    net.clock.advance(5000)
    assert net.node_sync(b, sid).deleted == ["one.txt"]
    assert b.share(sid).manifest.entry("one.txt").state == STATE_DELETED
    assert b.archived(sid, "one.txt", net.clock.now) == b"1" * 50


def test_tombstone_not_adopted_for_unheld_path():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "l", "master"), ("B", "10.0.0.2:1", "l", "readonly"))
    a.add_file(net, sid, "gone.txt", b"x")
    a.delete_file(net, sid, "gone.txt")
    net.node_sync(b, sid)
    assert b.share(sid).manifest.entry("gone.txt") is None


def test_last_writer_wins_on_newer_master_version():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "l", "master"), ("B", "10.0.0.2:1", "l", "readonly"))
    a.add_file(net, sid, "doc.txt", b"v1")
    net.node_sync(b, sid)
    net.clock.advance(3000)
    a.modify_offline(net, sid, "doc.txt", b"v2!")
    net.node_sync(b, sid)
    assert b.share(sid).content["doc.txt"] == b"v2!"


def test_invalidated_entry_is_frozen():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "l", "master"), ("B", "10.0.0.2:1", "l", "readonly"))
    a.add_file(net, sid, "doc.txt", b"original")
    net.node_sync(b, sid)
    b.secure_delete(net, sid, "doc.txt")
    entry = b.share(sid).manifest.entry("doc.txt")
    assert (entry.state, entry.invalidated, entry.peer) == (1, 1, b.peer_id)
    assert b.archived(sid, "doc.txt", net.clock.now) is None
    net.clock.advance(3000)
    a.modify_offline(net, sid, "doc.txt", b"changed upstream")
    assert net.node_sync(b, sid).downloaded == []
    assert "doc.txt" not in b.share(sid).content


def test_archive_retention():
    net, sid, (a,) = make_net(("A", "10.0.0.1:1", "", "master"))
    a.add_file(net, sid, "f", b"data")
    a.delete_file(net, sid, "f")
    thirty_days = Settings().archive_days * 86_400_000
    assert a.archived(sid, "f", net.clock.now + thirty_days) == b"data"
    a.purge_archive(net.clock.now + thirty_days + 1)
    assert a.archived(sid, "f", net.clock.now + thirty_days + 1) is None


def test_offline_node_is_unreachable():
    net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "", "master"), ("B", "10.0.0.2:1", "", "readonly"))
    net.set_online(a, False)
    with pytest.raises(Exception) as info:
        net.session_handshake(b, a.address, sid, b.share(sid).secret)
    assert type(info.value).__name__ == "PeerUnreachable"


def test_same_seed_same_trace():
    one = run_scenario(parse_scenario(poc_doc()))
    two = run_scenario(parse_scenario(poc_doc()))
    doc = poc_doc()
    doc["seed"] = 99
    three = run_scenario(parse_scenario(doc))
    assert one.trace_digest == two.trace_digest != three.trace_digest


def test_poc_outcome(poc_sim):
    a, b = poc_sim.node("ComputerA"), poc_sim.node("ComputerB")
    sid = next(iter(b.shares))
    assert sorted(poc_sim.sync_reports[0].downloaded) == ["badfilethree.txt", "badfiletwo.txt"]
    assert b.share(sid).manifest.entry("badfilethree.txt").invalidated == 1
    assert a.share(sid).manifest.entry("badfileone.txt").state == STATE_DELETED
    assert "badfilethree.txt" in a.share(sid).content


def test_memory_image_holds_live_identifiers(poc_sim):
    b = poc_sim.node("ComputerB")
    state = next(iter(b.shares.values()))
    blob = memory_image(b, poc_sim.net)
    assert state.secret.text.encode() in blob
    assert state.share_id.hex.encode() in blob
    assert blob == memory_image(b, poc_sim.net)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d["timeline"].append({"t_ms": 500000, "action": "sync", "node": "Ghost", "share": "evidence"}),
         "timeline[3].node"),
        (lambda d: d["timeline"].insert(0, {"t_ms": 999999, "action": "go_offline", "node": "ComputerA"}),
         "timeline[1].t_ms"),
        (lambda d: d["nodes"][1]["shares"][0].update(share="nope"), "nodes[1].shares[0].share"),
        (lambda d: d["nodes"][0].update(address="nowhere"), "nodes[0].address"),
        (lambda d: d["tracker"].update(ttl_minutes=5), "tracker.ttl_minutes"),
        (lambda d: d["timeline"][0].update(path="missing.txt"), "timeline[0].path"),
    ],
)
def test_scenario_validation_names_field(mutate, field):
    doc = copy.deepcopy(poc_doc())
    mutate(doc)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(doc)
    assert info.value.field == field


def test_loopback_transport_carries_a_sync():
    try:
        transport = LoopbackTransport()
        net, sid, (a, b) = make_net(("A", "10.0.0.1:1", "l", "master"), ("B", "10.0.0.2:1", "l", "readonly"),
                                    transport=transport, latency_ms=(0, 0))
    except OSError as exc:
        pytest.skip(f"no loopback sockets: {exc}")
    try:
        a.add_file(net, sid, "f.txt", b"over real udp")
        report = net.node_sync(b, sid)
        assert report.downloaded == ["f.txt"]
    finally:
        net.close()
