"""Wire messages: canonical bencoded dictionaries keyed by ``m``."""

from __future__ import annotations

import enum

from .. import bencode


class MessageKind(str, enum.Enum):
    MULTICAST_PING = "MULTICAST_PING"
    TRACKER_ANNOUNCE = "TRACKER_ANNOUNCE"
    TRACKER_RESPONSE = "TRACKER_RESPONSE"
    DHT_ANNOUNCE = "DHT_ANNOUNCE"
    DHT_GET_PEERS = "DHT_GET_PEERS"
    DHT_PEERS = "DHT_PEERS"
    HELLO = "HELLO"
    CHALLENGE = "CHALLENGE"
    AUTH = "AUTH"
    MANIFEST_REQUEST = "MANIFEST_REQUEST"
    MANIFEST_RESPONSE = "MANIFEST_RESPONSE"
    PIECE_REQUEST = "PIECE_REQUEST"
    PIECE_RESPONSE = "PIECE_RESPONSE"
    ERROR = "ERROR"


class MalformedMessage(ValueError):
    pass


def make(kind: MessageKind, share: bytes | None = None, **fields) -> dict:
    msg = {b"m": kind.value.encode()}
    if share is not None:
        msg[b"share"] = share
    elif kind is not MessageKind.HELLO:
        raise MalformedMessage(f"{kind.value} must carry a share")
    for key, value in fields.items():
        if value is not None:
            msg[key.encode()] = value
    return msg


def kind_of(msg: dict) -> MessageKind:
    try:
        return MessageKind(msg[b"m"].decode())
    except (KeyError, AttributeError, ValueError, UnicodeDecodeError):
        raise MalformedMessage(f"unknown message kind {msg.get(b'm')!r}") from None


def pack(msg: dict) -> bytes:
    return bencode.encode(msg)


def unpack(data: bytes) -> dict:
    """Lenient decode for input from possibly misbehaving peers."""
    try:
        msg = bencode.decode(data, strict=False)
    except bencode.BencodeError as exc:
        raise MalformedMessage(str(exc)) from None
    if not isinstance(msg, dict):
        raise MalformedMessage("message is not a dictionary")
    kind = kind_of(msg)
    if kind is not MessageKind.HELLO and not isinstance(msg.get(b"share"), bytes):
        raise MalformedMessage(f"{kind.value} without share")
    return msg
