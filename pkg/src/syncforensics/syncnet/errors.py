class SyncNetError(RuntimeError):
    code = "Error"


class NodeOffline(SyncNetError):
    code = "NodeOffline"


class PeerUnreachable(SyncNetError):
    code = "PeerUnreachable"


class UnknownShare(SyncNetError):
    code = "UnknownShare"


class AuthFailed(SyncNetError):
    code = "AuthFailed"


class BadToken(SyncNetError):
    code = "BadToken"


class UnknownFile(SyncNetError):
    code = "UnknownFile"


class PieceUnavailable(SyncNetError):
    code = "PieceUnavailable"


class NoPeersFound(SyncNetError):
    code = "NoPeersFound"


class ProtocolError(SyncNetError):
    code = "ProtocolError"


BY_CODE = {
    cls.code: cls
    for cls in (NodeOffline, PeerUnreachable, UnknownShare, AuthFailed, BadToken, UnknownFile,
                PieceUnavailable, NoPeersFound, ProtocolError)
}
