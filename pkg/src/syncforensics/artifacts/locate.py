"""Find client artifacts inside an acquired directory tree.

Each OS keeps the application directory in a different place relative to
the user's home (or the device root for iOS).  Share folders are located
from the ``path`` values in ``sync.dat``, re-rooted under the acquired tree,
and additionally by walking the tree for ``.SyncID`` files.

Every file whose bytes are read is appended to ``ArtifactSet.access_log``.
"""

from __future__ import annotations

import enum
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath, PureWindowsPath

from ..bencode import BencodeError
from ..identity import IdentityError, ShareID, derive_share_id
from ._schema import ArtifactError
from .syncdat import read_sync_dat
from .syncid import SYNC_ID_NAME, parse_sync_id

logger = logging.getLogger(__name__)


class RootNotFound(ArtifactError):
    pass


class OSProfile(str, enum.Enum):
    WINDOWS = "windows"
    MACOS = "macos"
    LINUX = "linux"
    IOS = "ios"


APP_DIRS = {
    OSProfile.WINDOWS: ("AppData", "Roaming", "BitTorrent Sync"),
    OSProfile.MACOS: ("Library", "Application Support", "BitTorrent Sync"),
    OSProfile.LINUX: (".sync",),
    OSProfile.IOS: ("Applications", "com.bittorent.BitTorrentSync", "Documents", "BitTorrent Sync"),
}

_DB_NAME = re.compile(r"[0-9A-F]{40}\.db")


@dataclass
class ShareLocation:
    folder: Path | None
    declared_path: str | None = None
    sync_id: Path | None = None
    share_id: ShareID | None = None
    manifest: Path | None = None


@dataclass
class ArtifactSet:
    root: Path
    profile: OSProfile
    app_dir: Path | None = None
    sync_dat: Path | None = None
    settings_dat: Path | None = None
    sync_log: Path | None = None
    shares: list[ShareLocation] = field(default_factory=list)
    orphan_manifests: list[Path] = field(default_factory=list)
    access_log: list[Path] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return self.sync_dat is None and self.settings_dat is None and self.sync_log is None and not self.shares

    def read(self, path: Path) -> bytes:
        self.access_log.append(path)
        return path.read_bytes()


def _find_app_dir(root: Path, profile: OSProfile) -> Path | None:
    rel = APP_DIRS[profile]
    candidates = [root.joinpath(*rel)]
    # root may be one level above the home directory (e.g. a Users/ folder)
    for child in sorted(p for p in root.iterdir() if p.is_dir()):
        candidates.append(child.joinpath(*rel))
    if (root / "sync.dat").is_file():
        candidates.insert(0, root)
    for c in candidates:
        if c.is_dir():
            return c
    return None


def _reroot(root: Path, declared: str) -> Path | None:
    """Map a path recorded on the original host onto the acquired tree."""
    windows = "\\" in declared or re.match(r"^[A-Za-z]:", declared)
    pure = PureWindowsPath(declared) if windows else PurePosixPath(declared)
    parts = [p for p in (pure.parts[1:] if pure.anchor else pure.parts) if p not in (".", "..")]
    for i in range(len(parts)):
        candidate = root.joinpath(*parts[i:])
        if candidate.is_dir():
            return candidate
    return None


def locate_artifacts(root: str | os.PathLike, os_profile: OSProfile | str) -> ArtifactSet:
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(f"evidence root {root} does not exist")
    profile = OSProfile(os_profile)
    found = ArtifactSet(root=root, profile=profile)
    app = _find_app_dir(root, profile)
    found.app_dir = app
    if app is not None:
        for name, attr in (("sync.dat", "sync_dat"), ("settings.dat", "settings_dat"), ("sync.log", "sync_log")):
            if (app / name).is_file():
                setattr(found, attr, app / name)

    folders: dict[str, ShareLocation] = {}
    if found.sync_dat is not None:
        try:
            sync_dat = read_sync_dat(found.read(found.sync_dat))
        except (BencodeError, ArtifactError, IdentityError) as exc:
            found.notes.append(f"sync.dat unreadable while locating shares: {exc}")
        else:
            for block in sync_dat.folders:
                folder = _reroot(root, block.path)
                if folder is None:
                    found.notes.append(f"share folder {block.path!r} not present in acquired tree")
                    folders[f"<absent>{block.path}"] = ShareLocation(
                        None, block.path, share_id=derive_share_id(block.secret)
                    )
                else:
                    folders.setdefault(str(folder), ShareLocation(folder, block.path))

    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        if SYNC_ID_NAME in filenames:
            folders.setdefault(dirpath, ShareLocation(Path(dirpath)))

    db_files = {}
    if app is not None:
        db_files = {p.name: p for p in sorted(app.iterdir()) if p.is_file() and _DB_NAME.fullmatch(p.name)}

    used = set()
    for key in sorted(folders):
        loc = folders[key]
        if loc.folder is not None and (loc.folder / SYNC_ID_NAME).is_file():
            loc.sync_id = loc.folder / SYNC_ID_NAME
            try:
                loc.share_id = parse_sync_id(found.read(loc.sync_id))
            except IdentityError as exc:
                found.notes.append(f"{loc.sync_id}: {exc}")
        if loc.share_id is not None and f"{loc.share_id.hex}.db" in db_files:
            loc.manifest = db_files[f"{loc.share_id.hex}.db"]
            used.add(loc.manifest.name)
        found.shares.append(loc)
    found.orphan_manifests = [p for name, p in db_files.items() if name not in used]
    logger.debug("located %d shares under %s", len(found.shares), root)
    return found


def detect_profile(root: str | os.PathLike) -> OSProfile:
    """Pick the profile whose application directory exists under ``root``."""
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(f"evidence root {root} does not exist")
    for profile in (OSProfile.WINDOWS, OSProfile.MACOS, OSProfile.IOS, OSProfile.LINUX):
        if root.joinpath(*APP_DIRS[profile]).is_dir():
            return profile
    for profile in OSProfile:
        app = _find_app_dir(root, profile)
        if app is not None and app != root:
            return profile
    return OSProfile.LINUX
