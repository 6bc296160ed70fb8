"""``.SyncID``: the raw 20-byte ShareID dropped into every share folder."""

from ..identity import ID_LEN, BadLength, ShareID

SYNC_ID_NAME = ".SyncID"


def parse_sync_id(data: bytes) -> ShareID:
    if len(data) != ID_LEN:
        raise BadLength(f".SyncID must hold exactly {ID_LEN} bytes, got {len(data)}")
    return ShareID(bytes(data))


def write_sync_id(share_id: ShareID) -> bytes:
    return share_id.id
