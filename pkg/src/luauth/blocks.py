"""Fixed-width 32-byte block algebra.

Every value that takes part in an XOR or XNOR of the handshake lives in this
domain: hash outputs, the pairwise key, identities, passwords, the masked row
index and timestamps.  Blocks are plain ``bytes`` of length 32.
"""

from __future__ import annotations

import hashlib
import re
from random import Random

from .errors import BadIdFormat, BadIndex, BadPassword

BLOCK_SIZE = 32
ZERO_BLOCK = bytes(BLOCK_SIZE)
ONES_BLOCK = b"\xff" * BLOCK_SIZE

ID_PATTERN = r"^[A-Za-z0-9._-]{1,64}$"
_ID_RE = re.compile(ID_PATTERN)

MAX_PASSWORD_BYTES = 256

_MASK = (1 << (8 * BLOCK_SIZE)) - 1
_PAD = BLOCK_SIZE - 8


def _int(block: bytes) -> int:
    if len(block) != BLOCK_SIZE:
        raise ValueError(f"block must be {BLOCK_SIZE} bytes, got {len(block)}")
    return int.from_bytes(block, "big")


def xor(a: bytes, b: bytes) -> bytes:
    return (_int(a) ^ _int(b)).to_bytes(BLOCK_SIZE, "big")


def complement(a: bytes) -> bytes:
    return (_int(a) ^ _MASK).to_bytes(BLOCK_SIZE, "big")


def xnor(a: bytes, b: bytes) -> bytes:
    """Bitwise exclusive-NOR, the complement of :func:`xor`."""
    return (_int(a) ^ _int(b) ^ _MASK).to_bytes(BLOCK_SIZE, "big")


def hash_block(block: bytes) -> bytes:
    """The one-way function F_h: SHA-256 of exactly one block."""
    _int(block)
    return hashlib.sha256(block).digest()


def is_valid_id(ident: str) -> bool:
    return isinstance(ident, str) and _ID_RE.fullmatch(ident) is not None


def id_block(ident: str) -> bytes:
    if not is_valid_id(ident):
        raise BadIdFormat(f"identity {ident!r} does not match {ID_PATTERN}")
    return hashlib.sha256(ident.encode("utf-8")).digest()


def pw_block(password: bytes | str) -> bytes:
    if isinstance(password, str):
        password = password.encode("utf-8")
    if not 1 <= len(password) <= MAX_PASSWORD_BYTES:
        raise BadPassword(f"password must be 1..{MAX_PASSWORD_BYTES} bytes")
    return hashlib.sha256(password).digest()


def _encode_u64(value: int) -> bytes:
    return bytes(_PAD) + value.to_bytes(8, "big")


def _decode_u64(block: bytes) -> int | None:
    if len(block) != BLOCK_SIZE or any(block[:_PAD]):
        return None
    return int.from_bytes(block[_PAD:], "big")


def encode_field(k: int) -> bytes:
    if not 0 <= k < 1 << 64:
        raise ValueError(f"field element {k} does not fit in 64 bits")
    return _encode_u64(k)


def decode_field(block: bytes, p: int) -> int:
    value = _decode_u64(block)
    if value is None or value >= p:
        raise ValueError("block does not hold a field element")
    return value


def encode_index(y: int, n: int) -> bytes:
    if not 1 <= y <= n:
        raise BadIndex(f"index {y} outside [1, {n}]")
    return _encode_u64(y)


def decode_index(block: bytes, n: int) -> int:
    value = _decode_u64(block)
    if value is None or not 1 <= value <= n:
        raise BadIndex("block does not hold an index in range")
    return value


def encode_timestamp(millis: int) -> bytes:
    if not 0 <= millis < 1 << 64:
        raise ValueError(f"timestamp {millis} does not fit in 64 bits")
    return _encode_u64(millis)


def random_block(rng: Random) -> bytes:
    return rng.randbytes(BLOCK_SIZE)
