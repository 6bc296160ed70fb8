"""Evidence report: a canonical JSON document plus a plain-text narrative.

Before anything is emitted every record is re-verified from its recovered
bytes; a disagreement with the stored result aborts the report.
The digest is the SHA1 of the canonical JSON form (sorted keys, no
whitespace) with the digest field itself left out.  No wall-clock time
enters the report, so identical inputs give identical digests.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .. import integrity
from ..integrity import verify_file
from .corroborate import CorroborationMatrix
from .recover import EvidenceRecord


class ReverificationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class CaseMetadata:
    case_id: str
    examiner: str = ""
    evidence_source: str = ""
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "examiner": self.examiner, "evidence_source": self.evidence_source,
                "notes": list(self.notes)}


@dataclass
class EvidenceReport:
    document: dict
    text: str
    records: list[EvidenceRecord] = field(default_factory=list)

    @property
    def digest(self) -> str:
        return self.document["digest"]


def canonical_json(value) -> bytes:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def report_digest(document: dict) -> str:
    body = {k: v for k, v in document.items() if k != "digest"}
    return hashlib.sha1(canonical_json(body)).hexdigest().upper()


def reverify(record: EvidenceRecord) -> None:
    if record.meta is None:
        if record.pieces:
            raise ReverificationFailed(f"{record.target.path}: pieces held without piece metadata")
        return
    again = verify_file(record.pieces, record.meta, whole_file_hash=record.target.expected_hash)
    if again != record.verification:
        raise ReverificationFailed(
            f"{record.target.path}: stored {record.verification.status.value}, "
            f"recomputed {again.status.value}; evidence has been altered"
        )
    content = record.content
    if record.verification.status is integrity.Status.FULL_MATCH and integrity.sha1(content) != record.target.expected_hash:
        raise ReverificationFailed(f"{record.target.path}: whole-file hash no longer matches")


def _record_dict(record: EvidenceRecord) -> dict:
    content = record.content
    return {
        "target": record.target.to_dict(),
        "verification": record.verification.to_dict(),
        "recovered_sha1": integrity.sha1(content).hex().upper() if content is not None else None,
        "recovered_size": len(content) if content is not None else sum(len(p) for p in record.pieces.values()),
        "sources": [{"peer": r.to_dict(), "pieces": sorted(idx)} for r, idx in record.sources],
        "custody_log": record.custody_log.to_list(),
    }


def _narrative(document: dict, matrix: CorroborationMatrix | None) -> str:
    case = document["case"]
    lines = [f"Evidence report for case {case['case_id']}"]
    if case.get("examiner"):
        lines.append(f"Examiner: {case['examiner']}")
    if case.get("evidence_source"):
        lines.append(f"Evidence source: {case['evidence_source']}")
    for note in case.get("notes", []):
        lines.append(f"Note: {note}")
    lines.append("")
    records = document["records"]
    if not records:
        lines.append("No recoverable targets were identified.")
    for rec in records:
        t, v = rec["target"], rec["verification"]
        lines.append(f"{t['path']} ({t['reason']}, {t['size']} bytes, expected SHA1 {t['expected_hash']})")
        lines.append(f"  result: {v['status']}; verified pieces {v['verified']}, missing {v['missing']}")
        if rec["recovered_sha1"]:
            lines.append(f"  recovered SHA1: {rec['recovered_sha1']}")
        for src in rec["sources"]:
            who = src["peer"]["peer_id"] or "unknown PeerID"
            lines.append(f"  source {src['peer']['address']} ({who}) served pieces {src['pieces']}")
        failures = sum(1 for e in rec["custody_log"] if e["action"] == "verify" and not e["ok"])
        lines.append(f"  custody log: {len(rec['custody_log'])} entries, {failures} failed verifications")
    if matrix is not None:
        lines += ["", "Corroboration of local evidence:", matrix.render()]
    lines += ["", f"Report digest (SHA1 of canonical JSON): {document['digest']}"]
    return "\n".join(lines) + "\n"


def build_report(records: list[EvidenceRecord], matrix: CorroborationMatrix | None,
                 case: CaseMetadata, extra: dict | None = None) -> EvidenceReport:
    for record in records:
        reverify(record)
    statuses = [r.verification.status.value for r in records]
    document = {
        "case": case.to_dict(),
        "summary": {
            "targets": len(records),
            "full_match": statuses.count("FULL_MATCH"),
            "partial": statuses.count("PARTIAL"),
            "mismatch": statuses.count("MISMATCH"),
        },
        "records": [_record_dict(r) for r in records],
        "matrix": matrix.to_dict() if matrix is not None else None,
        **(extra or {}),
    }
    document["digest"] = report_digest(document)
    return EvidenceReport(document, _narrative(document, matrix), list(records))


def write_report(report: EvidenceReport, case_out: str | Path) -> Path:
    """Write report.json, report.txt and the recovered files; returns the case directory."""
    case_dir = Path(case_out) / report.document["case"]["case_id"]
    case_dir.mkdir(parents=True, exist_ok=True)
    (case_dir / "report.json").write_text(json.dumps(report.document, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
    (case_dir / "report.txt").write_text(report.text, encoding="utf-8")
    for record in report.records:
        rel = [p for p in record.target.path.split("/") if p not in ("", ".", "..")]
        target = case_dir / "recovered" / record.target.share.hex / Path(*rel)
        target.parent.mkdir(parents=True, exist_ok=True)
        content = record.content
        if content is not None:
            target.write_bytes(content)
        else:
            for index, piece in sorted(record.pieces.items()):
                target.with_name(f"{target.name}.piece{index}").write_bytes(piece)
    return case_dir


def verify_report_document(document: dict) -> bool:
    return document.get("digest") == report_digest(document)
