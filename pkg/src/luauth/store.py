"""Versioned binary files for server state and issued smart cards.

Both formats end in a 32-byte integrity digest: the preceding bytes are cut
into 32-byte chunks (the last one zero-padded) and folded as
``acc = F_h(acc XOR chunk)`` starting from the zero block.  All integers are
big-endian.
"""

from __future__ import annotations

import os
from typing import BinaryIO, Union

from . import blocks, gfmatrix
from .errors import StoreError, StoreErrorKind
from .gfmatrix import FieldMatrix, KeyMatrix
from .protocol import HASH_ALG_SHA256, ServerState, SmartCard

SERVER_MAGIC = b"LUSV"
CARD_MAGIC = b"LUCD"
FORMAT_VERSION = 0x01
FLAG_REPLAY_CACHE = 0x01

DIGEST_SIZE = blocks.BLOCK_SIZE

Target = Union[str, os.PathLike, BinaryIO]


def chained_digest(data: bytes) -> bytes:
    acc = blocks.ZERO_BLOCK
    for off in range(0, len(data), blocks.BLOCK_SIZE):
        chunk = data[off:off + blocks.BLOCK_SIZE].ljust(blocks.BLOCK_SIZE, b"\0")
        acc = blocks.hash_block(blocks.xor(acc, chunk))
    return acc


def _seal(body: bytes) -> bytes:
    return body + chained_digest(body)


def _u(value: int, width: int) -> bytes:
    return value.to_bytes(width, "big")


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise StoreError(StoreErrorKind.TRUNCATED)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def uint(self, width: int) -> int:
        return int.from_bytes(self.take(width), "big")


def _open_checked(data: bytes, magic: bytes) -> _Reader:
    """Check magic, version and digest; return a reader over the body."""
    if len(data) < 5:
        raise StoreError(StoreErrorKind.TRUNCATED)
    if data[:4] != magic:
        raise StoreError(StoreErrorKind.BAD_MAGIC, f"expected {magic!r}, got {data[:4]!r}")
    if data[4] != FORMAT_VERSION:
        raise StoreError(StoreErrorKind.BAD_VERSION, f"version {data[4]}")
    if len(data) < 5 + DIGEST_SIZE:
        raise StoreError(StoreErrorKind.TRUNCATED)
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    if chained_digest(body) != digest:
        raise StoreError(StoreErrorKind.DIGEST_MISMATCH)
    return _Reader(body, 5)


def _finish(rd: _Reader):
    if rd.pos != len(rd.data):
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "trailing bytes before digest")


# -- server ----------------------------------------------------------------

def encode_server(state: ServerState) -> bytes:
    km = state.km
    parts = [SERVER_MAGIC, bytes([FORMAT_VERSION]), _u(km.p, 8), _u(km.n, 2),
             _u(state.delta_t_ms, 8),
             bytes([FLAG_REPLAY_CACHE if state.replay_cache_enabled else 0]),
             state.phi, km.seed]
    for m in (km.l, km.u):
        parts.extend(_u(v, 8) for r in m.entries for v in r)
    return _seal(b"".join(parts))


def _read_matrix(rd: _Reader, n: int, p: int) -> FieldMatrix:
    rows = []
    for _ in range(n):
        r = tuple(rd.uint(8) for _ in range(n))
        if any(v >= p for v in r):
            raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "matrix entry not below p")
        rows.append(r)
    return FieldMatrix(n, p, tuple(rows))


def decode_server(data: bytes) -> ServerState:
    rd = _open_checked(bytes(data), SERVER_MAGIC)
    p = rd.uint(8)
    n = rd.uint(2)
    delta = rd.uint(8)
    flags = rd.uint(1)
    phi = rd.take(32)
    seed = rd.take(32)
    if p < 2 or n < 2 or delta == 0 or flags & ~FLAG_REPLAY_CACHE:
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "bad header parameters")
    l = _read_matrix(rd, n, p)
    u = _read_matrix(rd, n, p)
    _finish(rd)

    try:
        regenerated = gfmatrix.generate_server_matrices(seed, n, p)
    except Exception as exc:
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, str(exc)) from exc
    km = KeyMatrix(l @ u, l, u, seed, regenerated.rejection_count)
    problems = km.invariant_violations()
    if (l, u) != (regenerated.l, regenerated.u):
        problems.append("matrices do not match the stored seed")
    if problems:
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "; ".join(problems))
    return ServerState(km, phi, delta,
                       replay_cache_enabled=bool(flags & FLAG_REPLAY_CACHE))


# -- card ------------------------------------------------------------------

def encode_card(card: SmartCard) -> bytes:
    ident = card.id.encode("utf-8")
    parts = [CARD_MAGIC, bytes([FORMAT_VERSION]), _u(card.p, 8), _u(card.n, 2),
             _u(len(ident), 2), ident, card.k_block, card.v, card.theta]
    parts.extend(_u(v, 8) for v in card.u_col)
    parts.append(bytes([card.hash_alg]))
    return _seal(b"".join(parts))


def decode_card(data: bytes) -> SmartCard:
    rd = _open_checked(bytes(data), CARD_MAGIC)
    p = rd.uint(8)
    n = rd.uint(2)
    try:
        ident = rd.take(rd.uint(2)).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "identity is not UTF-8") from exc
    k_block = rd.take(32)
    v = rd.take(32)
    theta = rd.take(32)
    u_col = tuple(rd.uint(8) for _ in range(n))
    alg = rd.uint(1)
    _finish(rd)
    if p < 2 or n < 1 or any(k >= p for k in u_col):
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "bad field parameters")
    if not blocks.is_valid_id(ident):
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, "bad identity format")
    if alg != HASH_ALG_SHA256:
        raise StoreError(StoreErrorKind.INVARIANT_VIOLATION, f"unknown hash algorithm {alg}")
    return SmartCard(ident, k_block, v, u_col, theta, n, p, alg)


# -- file helpers ------------------------------------------------------------

def _write(target: Target, data: bytes):
    if hasattr(target, "write"):
        target.write(data)
    else:
        with open(target, "wb") as fh:
            fh.write(data)


def _read(source: Target) -> bytes:
    if hasattr(source, "read"):
        return source.read()
    with open(source, "rb") as fh:
        return fh.read()


def save_server(state: ServerState, sink: Target):
    _write(sink, encode_server(state))


def load_server(source: Target) -> ServerState:
    return decode_server(_read(source))


def save_card(card: SmartCard, sink: Target):
    _write(sink, encode_card(card))


def load_card(source: Target) -> SmartCard:
    return decode_card(_read(source))
