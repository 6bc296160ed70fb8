"""Decide which files are worth recovering from remote peers."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..artifacts import STATE_DELETED, FileMeta
from ..identity import ShareID
from .disk import LocalEvidence


class TargetReason(str, enum.Enum):
    DELETED_LOCALLY = "DELETED_LOCALLY"
    INVALIDATED = "INVALIDATED"
    LISTED_ONLY = "LISTED_ONLY"


@dataclass(frozen=True)
class TargetFile:
    share: ShareID
    path: str
    reason: TargetReason
    expected_hash: bytes
    size: int
    meta: FileMeta | None = None

    def to_dict(self) -> dict:
        return {
            "share": self.share.hex,
            "path": self.path,
            "reason": self.reason.value,
            "expected_hash": self.expected_hash.hex().upper(),
            "size": self.size,
            "aggregate_hash": self.meta.aggregate_hash.hex().upper() if self.meta else None,
        }


def identify_targets(evidence: LocalEvidence) -> list[TargetFile]:
    """One target per deleted (state=2) or invalidated manifest entry."""
    targets = []
    for share in sorted(evidence.manifests, key=lambda s: s.hex):
        manifest = evidence.manifests[share]
        for entry in sorted(manifest.files, key=lambda e: e.path):
            if entry.state == STATE_DELETED:
                reason = TargetReason.DELETED_LOCALLY
            elif entry.invalidated:
                reason = TargetReason.INVALIDATED
            else:
                continue
            targets.append(TargetFile(share, entry.path, reason, entry.hash20, entry.size, manifest.meta_for(entry.path)))
    return targets


def listed_target(evidence: LocalEvidence, share: ShareID, path: str) -> TargetFile | None:
    """A target for a file the examiner names explicitly, whatever its flags."""
    manifest = evidence.manifests.get(share)
    entry = manifest.entry(path) if manifest else None
    if entry is None:
        return None
    return TargetFile(share, path, TargetReason.LISTED_ONLY, entry.hash20, entry.size, manifest.meta_for(path))
