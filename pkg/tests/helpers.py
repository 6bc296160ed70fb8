"""Scenario builders shared by the test modules."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

from syncforensics.acquisition import AcquisitionRequest, Method, run_acquisition
from syncforensics.syncnet import export_simulation, parse_scenario, run_scenario

PIECE = 1024


def poc_doc() -> dict:
    return json.loads(resources.files("syncforensics.data").joinpath("poc.json").read_text(encoding="utf-8"))


def _node(name, address, lan, access, files="all", **extra):
    node = {"name": name, "address": address, "lan": lan, "os": "linux",
            "settings": {"piece_len": PIECE},
            "shares": [{"share": "case", "access": access, "files": files}]}
    for key in ("pieces",):
        if key in extra:
            node["shares"][0][key] = extra.pop(key)
    node.update(extra)
    return node


def three_piece_doc(seed=7) -> dict:
    """The evidence node syncs a 3-piece file then wipes it; afterwards the
    only complete holder goes offline, leaving a partial holder missing piece 1."""
    return {
        "name": "three-piece",
        "seed": seed,
        "shares": {"case": {"files": {"ledger.xlsx": {"size": 2 * PIECE + 300, "seed": "ledger"}}}},
        "nodes": [
            _node("Source", "10.1.0.10:3839", "lan-1", "master"),
            _node("Partial", "10.2.0.10:3839", "lan-2", "readonly", ["ledger.xlsx"],
                  pieces={"ledger.xlsx": [0, 2]}),
            {**_node("Suspect", "10.3.0.10:3839", "lan-3", "readonly", []), "os": "windows"},
        ],
        "timeline": [
            {"t_ms": 1000, "action": "sync", "node": "Suspect", "share": "case"},
            {"t_ms": 5000, "action": "secure_delete", "node": "Suspect", "share": "case", "path": "ledger.xlsx"},
            {"t_ms": 9000, "action": "go_offline", "node": "Source"},
        ],
        "end_ms": 12000,
    }


def byzantine_doc(seed=11) -> dict:
    """A corrupting peer (one bad piece, then honest) next to an honest one."""
    return {
        "name": "byzantine",
        "seed": seed,
        "shares": {"case": {"files": {"plans.pdf": {"size": 3 * PIECE, "seed": "plans"}}}},
        "nodes": [
            _node("Honest", "10.1.0.10:3839", "lan-1", "master"),
            _node("Liar", "10.2.0.10:3839", "lan-2", "readonly", ["plans.pdf"],
                  byzantine={"max_corruptions": 1}),
            _node("Suspect", "10.3.0.10:3839", "lan-3", "readonly", []),
        ],
        "timeline": [
            {"t_ms": 0, "action": "go_offline", "node": "Liar"},
            {"t_ms": 1000, "action": "sync", "node": "Suspect", "share": "case"},
            {"t_ms": 5000, "action": "delete", "node": "Suspect", "share": "case", "path": "plans.pdf"},
            {"t_ms": 9000, "action": "go_online", "node": "Liar"},
        ],
        "end_ms": 12000,
    }


def simulate(doc: dict, out: Path):
    sim = run_scenario(parse_scenario(copy.deepcopy(doc)))
    export_simulation(sim, out)
    return sim


def acquire(out: Path, node: str, case_out: Path, known=(), methods=None, captures=True, **kw):
    cap = out / "captures" / node
    req = AcquisitionRequest(
        evidence_dir=out / node,
        case_out=case_out,
        memory=cap / "memory.bin" if captures and (cap / "memory.bin").exists() else None,
        netlog=cap / "netlog.jsonl" if captures else None,
        methods=set(Method) if methods is None else methods,
        known_peers=list(known),
        **kw,
    )
    return run_acquisition(req)
