"""Typed field access over decoded bencode dictionaries."""

from __future__ import annotations

from typing import Any

from .. import integrity


class ArtifactError(ValueError):
    pass


class SchemaViolation(ArtifactError):
    pass


class HashLengthError(SchemaViolation, integrity.HashLengthError):
    pass


class PieceCountMismatch(SchemaViolation):
    pass


class RangeError(ArtifactError):
    pass


_MISSING = object()


def require_dict(value: Any, what: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(f"{what} must be a dictionary, got {type(value).__name__}")
    return value


def get_bytes(d: dict, key: bytes, what: str, default: Any = _MISSING) -> bytes:
    value = d.get(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise SchemaViolation(f"{what}: missing required key {key.decode()!r}")
        return default
    if not isinstance(value, bytes):
        raise SchemaViolation(f"{what}: {key.decode()!r} must be a byte string")
    return value


def get_text(d: dict, key: bytes, what: str, default: Any = _MISSING) -> str:
    value = get_bytes(d, key, what, default)
    if not isinstance(value, bytes):
        return value
    try:
        return value.decode("utf-8")
    except UnicodeDecodeError:
        raise SchemaViolation(f"{what}: {key.decode()!r} is not valid UTF-8") from None


def get_int(d: dict, key: bytes, what: str, default: Any = _MISSING) -> int:
    value = d.get(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise SchemaViolation(f"{what}: missing required key {key.decode()!r}")
        return default
    if not isinstance(value, int):
        raise SchemaViolation(f"{what}: {key.decode()!r} must be an integer")
    return value


def get_flag(d: dict, key: bytes, what: str, default: int) -> int:
    value = get_int(d, key, what, default)
    if value not in (0, 1):
        raise SchemaViolation(f"{what}: {key.decode()!r} must be 0 or 1, got {value}")
    return value


def get_list(d: dict, key: bytes, what: str, default: Any = _MISSING) -> list:
    value = d.get(key, _MISSING)
    if value is _MISSING:
        if default is _MISSING:
            raise SchemaViolation(f"{what}: missing required key {key.decode()!r}")
        return default
    if not isinstance(value, list):
        raise SchemaViolation(f"{what}: {key.decode()!r} must be a list")
    return value


def extras(d: dict, known: frozenset[bytes]) -> dict:
    return {k: v for k, v in d.items() if k not in known}
