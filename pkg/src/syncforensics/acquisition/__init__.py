"""Remote evidence acquisition: discovery, investigation, enumeration,
recovery and verification."""

from .corroborate import (
    ITEMS,
    SOURCES,
    RECOVERABILITY,
    Cell,
    CellState,
    CorroborationMatrix,
    EntryPointBundle,
    InsufficientSources,
    NetworkObservation,
    Verdict,
    corroborate,
    load_bundle,
    parse_netlog,
)
from .disk import LocalEvidence, ShareLink, analyze_disk
from .enumeration import Method, enumerate_peers
from .memory import Fragment, MemoryFindings, SecretCandidate, scan_memory
from .pipeline import AcquisitionOutcome, AcquisitionRequest, UsageError, run_acquisition
from .recover import CustodyEvent, CustodyLog, EvidenceRecord, NoEligiblePeers, RecoveryPolicy, recover
from .report import (
    CaseMetadata,
    EvidenceReport,
    ReverificationFailed,
    build_report,
    canonical_json,
    report_digest,
    reverify,
    verify_report_document,
    write_report,
)
from .targets import TargetFile, TargetReason, identify_targets, listed_target

__all__ = [
    "AcquisitionOutcome", "AcquisitionRequest", "CaseMetadata", "Cell", "CellState", "CorroborationMatrix",
    "CustodyEvent", "CustodyLog", "EntryPointBundle", "EvidenceRecord", "EvidenceReport", "Fragment",
    "ITEMS", "InsufficientSources", "LocalEvidence", "MemoryFindings", "Method", "NetworkObservation",
    "NoEligiblePeers", "RecoveryPolicy", "ReverificationFailed", "SOURCES", "SecretCandidate", "ShareLink",
    "RECOVERABILITY", "TargetFile", "TargetReason", "UsageError", "Verdict", "analyze_disk", "build_report",
    "canonical_json", "corroborate", "enumerate_peers", "identify_targets", "listed_target", "load_bundle",
    "parse_netlog", "recover", "report_digest", "reverify", "run_acquisition", "scan_memory", "verify_report_document",
    "write_report",
]
