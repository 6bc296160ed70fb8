"""Parse every artifact an ``ArtifactSet`` points at and link them per share."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..artifacts import (
    ArtifactSet,
    Settings,
    ShareManifest,
    SyncDat,
    SyncDatConfig,
    SyncLog,
    parse_manifest,
    parse_settings,
    parse_sync_log,
    read_sync_dat,
)
from ..bencode import BencodeError
from ..artifacts._schema import ArtifactError
from ..identity import IdentityError, Secret, ShareID, derive_share_id
from ..integrity import IntegrityError

logger = logging.getLogger(__name__)

_PARSE_ERRORS = (BencodeError, ArtifactError, IdentityError, IntegrityError, UnicodeDecodeError)


@dataclass
class ShareLink:
    """Everything known about one share on the seized machine."""

    declared_path: str | None
    folder: Path | None
    secret: Secret | None = None
    derived_share_id: ShareID | None = None
    sync_id_share_id: ShareID | None = None
    manifest_path: Path | None = None
    issues: list[str] = field(default_factory=list)

    @property
    def share_id(self) -> ShareID | None:
        return self.derived_share_id or self.sync_id_share_id

    @property
    def consistent(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {
            "declared_path": self.declared_path,
            "folder": str(self.folder) if self.folder else None,
            "access": self.secret.access_level.name if self.secret else None,
            "derived_share_id": self.derived_share_id.hex if self.derived_share_id else None,
            "sync_id_share_id": self.sync_id_share_id.hex if self.sync_id_share_id else None,
            "manifest": self.manifest_path.name if self.manifest_path else None,
            "issues": list(self.issues),
        }


@dataclass
class LocalEvidence:
    artifacts: ArtifactSet
    sync_dat: SyncDat | None = None
    settings: Settings | None = None
    log: SyncLog | None = None
    manifests: dict[ShareID, ShareManifest] = field(default_factory=dict)
    links: list[ShareLink] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def configs(self) -> list[SyncDatConfig]:
        return self.sync_dat.folders if self.sync_dat else []

    def secret_for(self, share: ShareID) -> Secret | None:
        for link in self.links:
            if link.secret is not None and link.derived_share_id == share:
                return link.secret
        return None

    def link_for(self, share: ShareID) -> ShareLink | None:
        return next((link for link in self.links if link.share_id == share), None)


def _parse(evidence: LocalEvidence, path: Path, parser):
    try:
        return parser(evidence.artifacts.read(path))
    except _PARSE_ERRORS as exc:
        evidence.errors[str(path)] = f"{type(exc).__name__}: {exc}"
        logger.info("could not parse %s: %s", path, exc)
    except OSError as exc:
        evidence.errors[str(path)] = f"unreadable: {exc.strerror}"
    return None


def analyze_disk(artifacts: ArtifactSet) -> LocalEvidence:
    ev = LocalEvidence(artifacts)
    if artifacts.sync_dat is not None:
        ev.sync_dat = _parse(ev, artifacts.sync_dat, read_sync_dat)
    if artifacts.settings_dat is not None:
        ev.settings = _parse(ev, artifacts.settings_dat, parse_settings)
    if artifacts.sync_log is not None:
        ev.log = _parse(ev, artifacts.sync_log, parse_sync_log)

    by_declared = {loc.declared_path: loc for loc in artifacts.shares if loc.declared_path is not None}
    claimed = set()
    for config in ev.configs:
        loc = by_declared.get(config.path)
        link = ShareLink(config.path, loc.folder if loc else None, config.secret)
        try:
            link.derived_share_id = derive_share_id(config.secret)
        except IdentityError as exc:
            link.issues.append(f"cannot derive ShareID: {exc}")
        if loc is not None:
            claimed.add(id(loc))
            link.sync_id_share_id = loc.sync_id and loc.share_id
            if loc.folder is None:
                link.issues.append("share folder absent from the acquired tree")
            elif loc.sync_id is None:
                link.issues.append(".SyncID missing from share folder")
        ev.links.append(link)

    for loc in artifacts.shares:
        if id(loc) not in claimed:
            ev.links.append(ShareLink(loc.declared_path, loc.folder,
                                      sync_id_share_id=loc.share_id if loc.sync_id else None))

    app = artifacts.app_dir
    for link in ev.links:
        if link.derived_share_id and link.sync_id_share_id and link.derived_share_id != link.sync_id_share_id:
            link.issues.append(
                f"ShareID mismatch: secret derives {link.derived_share_id.hex}, "
                f".SyncID holds {link.sync_id_share_id.hex}"
            )
        if link.share_id is not None and app is not None:
            candidate = app / f"{link.share_id.hex}.db"
            if candidate.is_file():
                link.manifest_path = candidate
        if link.manifest_path is None and link.share_id is not None:
            link.issues.append(f"no manifest {link.share_id.hex}.db")

    paths = {link.manifest_path for link in ev.links if link.manifest_path} | set(artifacts.orphan_manifests)
    for path in sorted(paths):
        share = ShareID.from_hex(path.stem)
        manifest = _parse(ev, path, lambda data, s=share: parse_manifest(data, share_id=s))
        if manifest is not None:
            ev.manifests[share] = manifest
    return ev
