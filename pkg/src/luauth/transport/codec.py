"""Bit-exact wire frames for the two handshake messages.

Frame layout (all integers big-endian)::

    "LUAK" | version 0x01 | msg_type | u32 body length | body

Login request body (type 0x01)::

    u16 id length | id utf-8 | h_a[32] | v[32] | u16 N | N x u64 | s_a[32] | u64 t

Server response body (type 0x02)::

    m_prime[32] | u64 t_prime

Reject body (type 0x03) is a single reason code byte.
"""

from __future__ import annotations

import struct

from ..blocks import BLOCK_SIZE
from ..errors import Malformed
from ..gfmatrix import MERSENNE_61
from ..protocol import LoginRequest, RejectReason, ServerResponse

MAGIC = b"LUAK"
VERSION = 0x01
MSG_LOGIN_REQUEST = 0x01
MSG_SERVER_RESPONSE = 0x02
MSG_REJECT = 0x03

HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = HEADER.size

REASON_CODES = {
    RejectReason.BAD_ID_FORMAT: 1,
    RejectReason.STALE_TIMESTAMP: 2,
    RejectReason.BAD_INDEX: 3,
    RejectReason.KEY_MISMATCH: 4,
    RejectReason.REPLAY_DETECTED: 5,
    RejectReason.MALFORMED: 6,
}
_REASONS_BY_CODE = {v: k for k, v in REASON_CODES.items()}


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Malformed("frame truncated")
        out = bytes(self.data[self.pos:self.pos + n])
        self.pos += n
        return out

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def finish(self):
        if self.pos != len(self.data):
            raise Malformed("trailing bytes after body")


def frame(msg_type: int, body: bytes) -> bytes:
    return HEADER.pack(MAGIC, VERSION, msg_type, len(body)) + body


def unframe(data: bytes) -> tuple[int, bytes]:
    """Split a frame into ``(msg_type, body)``, validating the header."""
    if len(data) < HEADER_SIZE:
        raise Malformed("frame shorter than header")
    magic, version, msg_type, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise Malformed("bad magic")
    if version != VERSION:
        raise Malformed(f"unsupported version {version}")
    if len(data) - HEADER_SIZE != length:
        raise Malformed("length prefix does not match body")
    return msg_type, bytes(data[HEADER_SIZE:])


def _expect(data: bytes, msg_type: int) -> _Reader:
    got, body = unframe(data)
    if got != msg_type:
        raise Malformed(f"expected message type {msg_type:#04x}, got {got:#04x}")
    return _Reader(body)


def encode_login_request(req: LoginRequest) -> bytes:
    ident = req.id.encode("utf-8")
    for b in (req.h_a, req.v, req.s_a):
        if len(b) != BLOCK_SIZE:
            raise ValueError("request blocks must be 32 bytes")
    parts = [len(ident).to_bytes(2, "big"), ident, req.h_a, req.v,
             len(req.u_col).to_bytes(2, "big")]
    parts += [k.to_bytes(8, "big") for k in req.u_col]
    parts += [req.s_a, req.t.to_bytes(8, "big")]
    return frame(MSG_LOGIN_REQUEST, b"".join(parts))


def decode_login_request(data: bytes, p: int = MERSENNE_61) -> LoginRequest:
    rd = _expect(data, MSG_LOGIN_REQUEST)
    try:
        ident = rd.take(rd.u16()).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise Malformed("identity is not valid UTF-8") from exc
    h_a = rd.take(BLOCK_SIZE)
    v = rd.take(BLOCK_SIZE)
    n = rd.u16()
    u_col = tuple(rd.u64() for _ in range(n))
    if any(k >= p for k in u_col):
        raise Malformed("field element out of range")
    s_a = rd.take(BLOCK_SIZE)
    t = rd.u64()
    rd.finish()
    return LoginRequest(ident, h_a, v, u_col, s_a, t)


def login_request_offsets(req: LoginRequest) -> dict[str, tuple[int, int]]:
    """Byte span ``[start, end)`` of each field inside the encoded frame."""
    spans = {}
    pos = HEADER_SIZE + 2
    for name, size in (("id", len(req.id.encode("utf-8"))), ("h_a", BLOCK_SIZE),
                       ("v", BLOCK_SIZE), ("u_col", 2 + 8 * len(req.u_col)),
                       ("s_a", BLOCK_SIZE), ("t", 8)):
        spans[name] = (pos, pos + size)
        pos += size
    # the N prefix is structure, not value
    start, end = spans["u_col"]
    spans["u_col"] = (start + 2, end)
    return spans


def encode_server_response(resp: ServerResponse) -> bytes:
    if len(resp.m_prime) != BLOCK_SIZE:
        raise ValueError("m_prime must be 32 bytes")
    return frame(MSG_SERVER_RESPONSE, resp.m_prime + resp.t_prime.to_bytes(8, "big"))


def decode_server_response(data: bytes) -> ServerResponse:
    rd = _expect(data, MSG_SERVER_RESPONSE)
    m_prime = rd.take(BLOCK_SIZE)
    t_prime = rd.u64()
    rd.finish()
    return ServerResponse(m_prime, t_prime)


def encode_reject(reason: RejectReason) -> bytes:
    return frame(MSG_REJECT, bytes([REASON_CODES[reason]]))


def decode_reject(data: bytes) -> RejectReason:
    rd = _expect(data, MSG_REJECT)
    code = rd.take(1)[0]
    rd.finish()
    try:
        return _REASONS_BY_CODE[code]
    except KeyError:
        raise Malformed(f"unknown reject code {code}") from None


def decode_reply(data: bytes) -> ServerResponse | RejectReason:
    """Decode whatever the server sent back: a response or a reject."""
    msg_type, _ = unframe(data)
    if msg_type == MSG_REJECT:
        return decode_reject(data)
    return decode_server_response(data)
