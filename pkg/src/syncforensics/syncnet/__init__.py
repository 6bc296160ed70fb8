"""Deterministic simulation of the synchronisation network."""

from .clock import EventHandle, SimClock
from .discovery import (
    DHT_K,
    CheckinRegistry,
    NoReachableStorageNodes,
    PeerRecord,
    TrackerState,
    merge_records,
    xor_closest,
    xor_distance,
)
from .errors import (
    AuthFailed,
    BadToken,
    NodeOffline,
    NoPeersFound,
    PeerUnreachable,
    PieceUnavailable,
    ProtocolError,
    SyncNetError,
    UnknownFile,
    UnknownShare,
)
from .export import SIMULATION_FILE, export_simulation, memory_image, share_folder
from .messages import MalformedMessage, MessageKind
from .network import MULTICAST_GROUP, TRACKER_ADDRESS, Handshake, Network, SyncReport, TraceEntry
from .node import Byzantine, ShareState, SyncNode
from .scenario import (
    ScenarioError,
    ScenarioSpec,
    SimulationResult,
    bundled_scenario,
    build_network,
    load_scenario,
    parse_scenario,
    run_scenario,
    seeded_content,
)
from .transport import LoopbackTransport, MemoryTransport

__all__ = [
    "AuthFailed", "BadToken", "Byzantine", "CheckinRegistry", "DHT_K", "EventHandle", "Handshake",
    "LoopbackTransport", "MULTICAST_GROUP", "MalformedMessage", "MemoryTransport", "MessageKind",
    "Network", "NoPeersFound", "NoReachableStorageNodes", "NodeOffline", "PeerRecord", "PeerUnreachable",
    "PieceUnavailable", "ProtocolError", "SIMULATION_FILE", "ScenarioError", "ScenarioSpec", "ShareState",
    "SimClock", "SimulationResult", "SyncNetError", "SyncNode", "SyncReport", "TRACKER_ADDRESS",
    "TraceEntry", "TrackerState", "UnknownFile", "UnknownShare", "build_network", "bundled_scenario",
    "export_simulation", "load_scenario", "memory_image", "merge_records", "parse_scenario",
    "run_scenario", "seeded_content", "share_folder", "xor_closest", "xor_distance",
]
