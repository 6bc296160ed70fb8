"""Command-line entry point.

Exit codes: 0 success, 1 parse failure, 2 usage error, 3 verification
degraded, 4 nothing to do.
"""

from __future__ import annotations

import argparse
import dataclasses
import enum
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import bencode
from .acquisition import AcquisitionRequest, Method, UsageError, run_acquisition, verify_report_document
from .artifacts import (
    SYNC_ID_NAME,
    ArtifactError,
    parse_manifest,
    parse_settings,
    parse_sync_id,
    parse_sync_log,
    read_sync_dat,
)
from .identity import IdentityError, PeerID, Secret, ShareID, decode_secret, derive_share_id
from .integrity import index_file, sha1
from .syncnet import ScenarioError, export_simulation, parse_scenario, run_scenario

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_USAGE = 2
EXIT_DEGRADED = 3
EXIT_NOTHING = 4

def jsonable(value):
    """Flatten parsed artifacts into JSON-friendly values."""
    if isinstance(value, Secret):
        return {"text": value.text, "access": value.access_level.name, "share_id": derive_share_id(value).hex}
    if isinstance(value, (ShareID, PeerID)):
        return value.hex
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).hex().upper()
    if isinstance(value, Path):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {(k.decode("latin-1") if isinstance(k, bytes) else str(k)): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        return [jsonable(v) for v in value]
    return value


def emit(args, doc: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(text.rstrip("\n"))


def _scenario_doc(path: str | None) -> tuple[dict, str]:
    if path is None:
        text = resources.files("syncforensics.data").joinpath("poc.json").read_text(encoding="utf-8")
        label = "poc.json (bundled)"
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioError("document", f"cannot read {path}: {exc.strerror}") from None
        label = path
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("document", f"invalid JSON ({exc})") from None
    return doc, label


def cmd_simulate(args) -> int:
    try:
        doc, label = _scenario_doc(args.scenario)
        if args.seed is not None and isinstance(doc, dict):
            doc["seed"] = args.seed
        sim = run_scenario(parse_scenario(doc))
    except ScenarioError as exc:
        print(f"error: scenario {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out or "sim-out")
    exports = export_simulation(sim, out)
    nodes = {name: {"root": str(e.root), "online": sim.node(name).online} for name, e in exports.items()}
    doc = {"scenario": label, "seed": sim.spec.seed, "out": str(out), "trace_digest": sim.trace_digest,
           "end_ms": sim.net.clock.now, "nodes": nodes}
    lines = [f"scenario {label} (seed {sim.spec.seed}) ran to t={sim.net.clock.now} ms",
             *(f"  {name}: {info['root']}" for name, info in nodes.items()),
             f"trace digest {sim.trace_digest}"]
    emit(args, doc, "\n".join(lines))
    return EXIT_OK


def _inspect_kind(path: Path, data: bytes) -> str | None:
    name = path.name
    if name == "sync.dat":
        return "sync.dat"
    if name == "settings.dat":
        return "settings.dat"
    if name == "sync.log" or name.endswith(".log"):
        return "sync.log"
    if name == SYNC_ID_NAME:
        return ".SyncID"
    if name.endswith(".db"):
        return "manifest"
    # fall back on content
    if len(data) == 20:
        return ".SyncID"
    try:
        top = bencode.decode(data, strict=False)
    except bencode.BencodeError:
        return None
    if isinstance(top, dict):
        if b"files" in top or b"meta" in top:
            return "manifest"
        if b"folders" in top or b"secret" in top:
            return "sync.dat"
        if b"sync_archive_enabled" in top or b"piece_len" in top:
            return "settings.dat"
    return None


def _render_sync_dat(sync_dat) -> str:
    lines = []
    for folder in sync_dat.folders:
        share = derive_share_id(folder.secret)
        lines.append(f"share {share.hex}")
        rows = [
            ("path", folder.path),
            ("secret", f"{folder.secret.text} ({folder.secret.access_level.name})"),
            ("pub_key", folder.pub_key.hex().upper() if folder.pub_key else ""),
            ("stopped_by_user", folder.stopped_by_user),
            ("use_dht", folder.use_dht),
            ("use_lan_broadcast", folder.use_lan_broadcast),
            ("use_relay", folder.use_relay),
            ("use_tracker", folder.use_tracker),
            ("use_known_hosts", folder.use_known_hosts),
            ("known_hosts", ", ".join(folder.known_hosts)),
        ]
        rows += [(f"peers[{i}]", f"{p.id.hex} last_sync_completed={p.last_sync_completed}")
                 for i, p in enumerate(folder.peers)]
        lines += [f"  {key:<18} {value}" for key, value in rows]
        lines.append(f"  {'derived ShareID':<18} {share.hex}")
    return "\n".join(lines) or "no shares configured"


def _render_manifest(manifest) -> str:
    lines = [f"{'path':<24} {'size':>9} {'state':>5} {'inv':>3}  hash20"]
    for e in manifest.files:
        lines.append(f"{e.path:<24} {e.size:>9} {e.state:>5} {e.invalidated:>3}  {e.hash20.hex().upper()}")
    for m in manifest.meta:
        lines.append(f"meta {m.path}: {len(m.piece_hashes)} piece(s) of {m.piece_len}, "
                     f"aggregate {m.aggregate_hash.hex().upper()}")
    lines += [f"warning: {w}" for w in manifest.warnings]
    return "\n".join(lines)


def cmd_inspect(args) -> int:
    path = Path(args.artifact)
    if not path.is_file():
        print(f"error: {path} is not a file", file=sys.stderr)
        return EXIT_USAGE
    data = path.read_bytes()
    kind = _inspect_kind(path, data)
    if kind is None:
        print(f"error: cannot tell what kind of artifact {path} is", file=sys.stderr)
        return EXIT_USAGE
    try:
        if kind == "sync.dat":
            parsed = read_sync_dat(data)
            text = _render_sync_dat(parsed)
        elif kind == "settings.dat":
            parsed = parse_settings(data)
            text = "\n".join(f"{k:<22} {v}" for k, v in jsonable(parsed).items() if k != "extra")
        elif kind == "sync.log":
            parsed = parse_sync_log(data)
            text = "\n".join([e.format() for e in parsed.events]
                             + [f"warning line {w.line_no}: {w.reason}" for w in parsed.warnings])
        elif kind == ".SyncID":
            parsed = parse_sync_id(data)
            text = parsed.hex
        else:
            share = None
            stem = path.name.removesuffix(".db")
            if len(stem) == 40:
                try:
                    share = ShareID.from_hex(stem)
                except IdentityError:
                    share = None
            parsed = parse_manifest(data, share)
            text = _render_manifest(parsed)
    except (bencode.BencodeError, ArtifactError, IdentityError) as exc:
        print(f"error: {path}: {kind} parse failed: {exc}", file=sys.stderr)
        return EXIT_PARSE
    emit(args, {"artifact": str(path), "kind": kind, "content": jsonable(parsed)}, f"[{kind}] {path}\n{text}")
    return EXIT_OK


def cmd_shareid(args) -> int:
    try:
        secret = decode_secret(args.secret)
    except IdentityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    share = derive_share_id(secret)
    emit(args, {"share_id": share.hex, "access": secret.access_level.name}, share.hex)
    return EXIT_OK


def cmd_acquire(args) -> int:
    try:
        methods = Method.parse(args.methods)
    except ValueError as exc:
        print(f"error: --methods: {exc}", file=sys.stderr)
        return EXIT_USAGE
    req = AcquisitionRequest(
        evidence_dir=Path(args.evidence_dir),
        case_out=Path(args.case_out or args.out or "cases"),
        memory=Path(args.memory) if args.memory else None,
        netlog=Path(args.netlog) if args.netlog else None,
        mobile=Path(args.mobile) if args.mobile else None,
        methods=methods,
        known_peers=list(args.known_peer),
        secret=args.secret,
        case_id=args.case_id,
        network=Path(args.network) if args.network else None,
        seed=args.seed if args.seed is not None else 0,
    )
    try:
        outcome = run_acquisition(req)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"error: recorded scenario unusable: {exc}", file=sys.stderr)
        return EXIT_PARSE
    doc = dict(outcome.report.document, case_dir=str(outcome.case_dir), exit_code=outcome.exit_code)
    emit(args, doc, outcome.report.text + f"\nWritten to {outcome.case_dir}")
    return outcome.exit_code


def cmd_verify(args) -> int:
    try:
        content = Path(args.file).read_bytes()
        manifest_data = Path(args.manifest).read_bytes()
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = parse_manifest(manifest_data)
    except (bencode.BencodeError, ArtifactError, IdentityError) as exc:
        print(f"error: {args.manifest}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    name = args.path or Path(args.file).name
    entry, meta = manifest.entry(name), manifest.meta_for(name)
    if entry is None:
        print(f"error: no entry {name!r} in {args.manifest}", file=sys.stderr)
        return EXIT_USAGE
    whole = sha1(content)
    checks = {"size": len(content) == entry.size, "sha1": whole == entry.hash20}
    doc = {"path": name, "size": len(content), "expected_size": entry.size,
           "sha1": whole.hex().upper(), "expected_sha1": entry.hash20.hex().upper()}
    if meta is not None:
        index = index_file(content, meta.piece_len)
        checks["aggregate"] = index.aggregate_hash == meta.aggregate_hash
        doc["aggregate"] = index.aggregate_hash.hex().upper()
        doc["expected_aggregate"] = meta.aggregate_hash.hex().upper()
        doc["bad_pieces"] = [i for i, (a, b) in enumerate(zip(index.piece_hashes, meta.piece_hashes)) if a != b]
    ok = all(checks.values())
    doc["checks"], doc["match"] = checks, ok
    lines = [f"{name}: {'MATCH' if ok else 'MISMATCH'}",
             f"  sha1      {doc['sha1']} (expected {doc['expected_sha1']})"]
    if "aggregate" in doc:
        lines.append(f"  aggregate {doc['aggregate']} (expected {doc['expected_aggregate']})")
        if doc["bad_pieces"]:
            lines.append(f"  pieces differing: {doc['bad_pieces']}")
    emit(args, doc, "\n".join(lines))
    return EXIT_OK if ok else EXIT_DEGRADED


def cmd_report(args) -> int:
    path = Path(args.report)
    if path.is_dir():
        path = path / "report.json"
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: {path}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if not isinstance(document, dict) or "digest" not in document:
        print(f"error: {path} is not an evidence report", file=sys.stderr)
        return EXIT_PARSE
    intact = verify_report_document(document)
    narrative = path.with_name("report.txt")
    text = narrative.read_text(encoding="utf-8") if narrative.is_file() else ""
    status = "digest verified" if intact else "DIGEST MISMATCH: report altered after it was written"
    emit(args, {"report": str(path), "digest": document["digest"], "intact": intact, "summary": document.get("summary")},
         f"{text}\n{status}")
    return EXIT_OK if intact else EXIT_DEGRADED


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # the subcommand copy must not overwrite a value given before the subcommand
        def default(value):
            return argparse.SUPPRESS if suppress else value

        flags = argparse.ArgumentParser(add_help=False)
        flags.add_argument("--seed", type=int, default=default(None), help="override the scenario or investigator seed")
        flags.add_argument("--out", default=default(None), help="output directory")
        flags.add_argument("--format", choices=("text", "json"), default=default("text"))
        flags.add_argument("-v", "--verbose", action="store_true", default=default(False))
        return flags

    common = global_flags(suppress=True)
    parser = argparse.ArgumentParser(
        prog="syncforensics",
        description="Simulated file-sync network and remote evidence acquisition toolkit.",
        parents=[global_flags(suppress=False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario and write artifact trees")
    p.add_argument("scenario", nargs="?", help="scenario JSON (default: bundled poc.json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inspect", parents=[common], help="parse and print one artifact")
    p.add_argument("artifact")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("shareid", parents=[common], help="derive a ShareID from a secret")
    p.add_argument("secret")
    p.set_defaults(func=cmd_shareid)

    p = sub.add_parser("acquire", parents=[common], help="run the acquisition steps on an evidence tree")
    p.add_argument("evidence_dir")
    p.add_argument("case_out", nargs="?", help="case output directory (default: --out or ./cases)")
    p.add_argument("--memory", help="memory image to scan")
    p.add_argument("--netlog", help="network observation log (JSON lines)")
    p.add_argument("--mobile", help="mobile artifact tree")
    p.add_argument("--methods", default="all",
                   help="comma list of multicast,tracker,dht,known_hosts,sync_log; or all / none")
    p.add_argument("--known-peer", action="append", default=[], metavar="ADDR",
                   help="restrict contact to this peer (host:port or simulated node name); repeatable")
    p.add_argument("--secret", help="share secret, if not recoverable from the evidence")
    p.add_argument("--case-id")
    p.add_argument("--network", help="simulation.json to replay (default: searched near the evidence)")
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("verify", parents=[common], help="check a file against its manifest entry")
    p.add_argument("file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--path", help="manifest entry name (default: the file's name)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common], help="re-check and print a written evidence report")
    p.add_argument("report", help="case directory or report.json")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
