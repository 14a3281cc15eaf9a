"""Canonical length-prefixed byte encoding shared by keys, blocks and messages.

Layout of an encoded field list::

    u32 count
    repeat count times:
        u8  type tag   (b'B' bytes, b'S' utf-8 str, b'I' signed int, b'L' nested list)
        u32 length
        length bytes of body

Integers are big-endian two's complement in the minimal number of bytes
(zero encodes as a single 0x00 byte). Everything is big-endian so that two
independent encoders produce identical bytes for identical values.
"""

from __future__ import annotations

import hashlib
import random
import struct
from typing import Iterable, Union

Field = Union[bytes, str, int, list, tuple, None]

_U32 = struct.Struct(">I")


def _int_bytes(value: int) -> bytes:
    length = max(1, (value.bit_length() + 8) // 8)
    return value.to_bytes(length, "big", signed=True)


def encode_fields(fields: Iterable[Field]) -> bytes:
    items = list(fields)
    out = [_U32.pack(len(items))]
    for item in items:
        if isinstance(item, bool):
            tag, body = b"I", _int_bytes(int(item))
        elif isinstance(item, int):
            tag, body = b"I", _int_bytes(item)
        elif isinstance(item, bytes):
            tag, body = b"B", item
        elif isinstance(item, str):
            tag, body = b"S", item.encode("utf-8")
        elif isinstance(item, (list, tuple)):
            tag, body = b"L", encode_fields(item)
        elif item is None:
            tag, body = b"B", b""
        else:
            raise TypeError(f"cannot encode {type(item).__name__}")
        out.append(tag + _U32.pack(len(body)) + body)
    return b"".join(out)


def decode_fields(data: bytes) -> list:
    """Inverse of :func:`encode_fields`. ``None`` decodes as ``b''``."""
    items, offset = _decode(data, 0)
    if offset != len(data):
        raise ValueError("trailing bytes after encoded field list")
    return items


def _decode(data: bytes, offset: int) -> tuple[list, int]:
    if len(data) - offset < 4:
        raise ValueError("truncated field count")
    (count,) = _U32.unpack_from(data, offset)
    offset += 4
    items: list = []
    for _ in range(count):
        if len(data) - offset < 5:
            raise ValueError("truncated field header")
        tag = data[offset : offset + 1]
        (length,) = _U32.unpack_from(data, offset + 1)
        offset += 5
        body = data[offset : offset + length]
        if len(body) != length:
            raise ValueError("truncated field body")
        offset += length
        if tag == b"B":
            items.append(bytes(body))
        elif tag == b"S":
            items.append(body.decode("utf-8"))
        elif tag == b"I":
            items.append(int.from_bytes(body, "big", signed=True))
        elif tag == b"L":
            nested, end = _decode(body, 0)
            if end != len(body):
                raise ValueError("trailing bytes in nested list")
            items.append(nested)
        else:
            raise ValueError(f"unknown field tag {tag!r}")
    return items, offset


def digest(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.digest()


def derive_seed(seed: int, *labels: Field) -> int:
    """Child seed for a named sub-stream of a scenario seed."""
    return int.from_bytes(digest(encode_fields([seed, *labels]))[:8], "big")


def seeded_rng(seed) -> random.Random:
    """Accept a ready RNG, an int seed, or a label tuple hashed via derive_seed."""
    if isinstance(seed, random.Random):
        return seed
    if isinstance(seed, int):
        return random.Random(seed)
    labels = seed if isinstance(seed, tuple) else (seed,)
    return random.Random(derive_seed(0, *labels))
