"""Canonical bencode encoder/decoder.

Values map onto Python as ``bytes`` (byte strings), ``int``, ``list`` and
``dict`` with ``bytes`` keys.  ``str`` is accepted by the encoder as a
convenience and written as UTF-8; the decoder always returns ``bytes``.

Decoding is strict by default: unsorted dictionary keys, leading zeros and
negative zero raise :class:`NonCanonical`.  ``strict=False`` tolerates those
forms so that a misbehaving peer cannot crash a node.
"""

from __future__ import annotations

from typing import Any, Union

BValue = Union[bytes, int, list, dict]

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
MAX_DEPTH = 200

_DIGITS = b"0123456789"


class BencodeError(ValueError):
    """Base class for all bencode failures; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class TruncatedInput(BencodeError):
    pass


class TrailingBytes(BencodeError):
    pass


class MalformedToken(BencodeError):
    pass


class NonCanonical(BencodeError):
    pass


# -- encoding ----------------------------------------------------------------


def encode(value: Any) -> bytes:
    out: list[bytes] = []
    _encode(value, out)
    return b"".join(out)


def _encode(value: Any, out: list[bytes]) -> None:
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise MalformedToken(f"integer {value} outside signed 64-bit range")
        out.append(b"i%de" % value)
    elif isinstance(value, (bytes, bytearray, memoryview)):
        value = bytes(value)
        out.append(b"%d:" % len(value))
        out.append(value)
    elif isinstance(value, str):
        _encode(value.encode("utf-8"), out)
    elif isinstance(value, (list, tuple)):
        out.append(b"l")
        for item in value:
            _encode(item, out)
        out.append(b"e")
    elif isinstance(value, dict):
        items = []
        for key, item in value.items():
            if isinstance(key, str):
                key = key.encode("utf-8")
            if not isinstance(key, (bytes, bytearray)):
                raise TypeError(f"dictionary key must be bytes, not {type(key).__name__}")
            items.append((bytes(key), item))
        items.sort(key=lambda kv: kv[0])
        for (a, _), (b, _) in zip(items, items[1:]):
            if a == b:
                raise MalformedToken(f"duplicate dictionary key {a!r}")
        out.append(b"d")
        for key, item in items:
            _encode(key, out)
            _encode(item, out)
        out.append(b"e")
    else:
        raise TypeError(f"cannot bencode {type(value).__name__}")


# -- decoding ----------------------------------------------------------------


class _Decoder:
    def __init__(self, data: bytes, strict: bool):
        self.data = data
        self.strict = strict
        self.pos = 0

    def peek(self) -> int:
        if self.pos >= len(self.data):
            raise TruncatedInput("unexpected end of input", self.pos)
        return self.data[self.pos]

    def value(self, depth: int) -> BValue:
        if depth > MAX_DEPTH:
            raise MalformedToken("nesting too deep", self.pos)
        c = self.peek()
        if c == ord("i"):
            return self.integer()
        if c == ord("l"):
            self.pos += 1
            items = []
            while self.peek() != ord("e"):
                items.append(self.value(depth + 1))
            self.pos += 1
            return items
        if c == ord("d"):
            return self.dictionary(depth)
        if c in _DIGITS:
            return self.string()
        raise MalformedToken(f"unexpected byte {bytes([c])!r}", self.pos)

    def integer(self) -> int:
        start = self.pos
        end = self.data.find(b"e", start + 1)
        if end == -1:
            raise TruncatedInput("unterminated integer", start)
        body = self.data[start + 1 : end]
        digits = body[1:] if body.startswith(b"-") else body
        if not digits or any(b not in _DIGITS for b in digits):
            raise MalformedToken(f"bad integer {body!r}", start)
        if self.strict:
            if len(digits) > 1 and digits[0] == ord("0"):
                raise NonCanonical(f"leading zero in integer {body!r}", start)
            if body == b"-0":
                raise NonCanonical("negative zero", start)
        if len(digits.lstrip(b"0")) > 19:
            raise MalformedToken(f"integer {body[:24]!r}... outside signed 64-bit range", start)
        n = int(body)
        if not INT64_MIN <= n <= INT64_MAX:
            raise MalformedToken(f"integer {body!r} outside signed 64-bit range", start)
        self.pos = end + 1
        return n

    def string(self) -> bytes:
        start = self.pos
        colon = self.data.find(b":", start)
        if colon == -1:
            raise TruncatedInput("unterminated string length", start)
        prefix = self.data[start:colon]
        if not prefix or any(b not in _DIGITS for b in prefix):
            raise MalformedToken(f"bad string length {prefix!r}", start)
        if self.strict and len(prefix) > 1 and prefix[0] == ord("0"):
            raise NonCanonical(f"leading zero in string length {prefix!r}", start)
        if len(prefix) > 19:
            raise MalformedToken("string length prefix too long", start)
        length = int(prefix)
        end = colon + 1 + length
        if end > len(self.data):
            raise TruncatedInput(f"string of length {length} runs past end", start)
        self.pos = end
        return self.data[colon + 1 : end]

    def dictionary(self, depth: int) -> dict:
        self.pos += 1
        result: dict[bytes, BValue] = {}
        previous: bytes | None = None
        while self.peek() != ord("e"):
            key_pos = self.pos
            if self.peek() not in _DIGITS:
                raise MalformedToken("dictionary key is not a byte string", key_pos)
            key = self.string()
            if key in result:
                raise (NonCanonical if self.strict else MalformedToken)(
                    f"duplicate dictionary key {key!r}", key_pos
                )
            if self.strict and previous is not None and key < previous:
                raise NonCanonical(f"key {key!r} out of order after {previous!r}", key_pos)
            previous = key
            result[key] = self.value(depth + 1)
        self.pos += 1
        return result


def decode(data: bytes, strict: bool = True) -> BValue:
    """Decode exactly one value spanning all of ``data``."""
    data = bytes(data)
    decoder = _Decoder(data, strict)
    value = decoder.value(0)
    if decoder.pos != len(data):
        raise TrailingBytes(f"{len(data) - decoder.pos} trailing bytes", decoder.pos)
    return value


def decode_prefix(data: bytes, strict: bool = True) -> tuple[BValue, int]:
    """Decode the first value in ``data``; returns it with the end offset."""
    decoder = _Decoder(bytes(data), strict)
    value = decoder.value(0)
    return value, decoder.pos
