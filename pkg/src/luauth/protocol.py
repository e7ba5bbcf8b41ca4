"""Authentication-server and smart-card roles of the bilateral handshake.

Registration issues a card holding ``(K_xy, v, U_C(x), theta)``.  At login
the card sends ``M = (ID, H_a, v, U_C(x), S_a, T)``; the server unmasks the
row index, recomputes ``K_yx`` from its own L row and the presented U column,
recovers the card's nonce and checks the key.  It answers with
``M' = F_h(K XNOR T')`` which the card checks in turn.

Clocks are never read here: every ``now`` is an explicit millisecond value.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import threading
from dataclasses import dataclass, field
from random import Random

from . import blocks, gfmatrix
from .blocks import encode_field, encode_index, encode_timestamp, hash_block, xnor, xor
from .errors import BadIndex, IdMismatch
from .gfmatrix import MERSENNE_61, KeyMatrix

log = logging.getLogger(__name__)

DEFAULT_DELTA_T_MS = 30_000
HASH_ALG_SHA256 = 0x01


class RejectReason(enum.Enum):
    BAD_ID_FORMAT = "BadIdFormat"
    STALE_TIMESTAMP = "StaleTimestamp"
    BAD_INDEX = "BadIndex"
    KEY_MISMATCH = "KeyMismatch"
    REPLAY_DETECTED = "ReplayDetected"
    MALFORMED = "Malformed"


class ReplayCache:
    """Digests of accepted requests, each kept until its window closes."""

    def __init__(self):
        self._seen: dict[bytes, int] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._seen)

    def check_and_record(self, digest: bytes, expiry: int, now: int) -> bool:
        """Return False if ``digest`` is already live, otherwise record it."""
        with self._lock:
            for d in [d for d, exp in self._seen.items() if exp < now]:
                del self._seen[d]
            if digest in self._seen:
                return False
            self._seen[digest] = expiry
            return True


@dataclass(frozen=True)
class ServerState:
    km: KeyMatrix
    phi: bytes
    delta_t_ms: int = DEFAULT_DELTA_T_MS
    id_rule: str = blocks.ID_PATTERN
    replay_cache_enabled: bool = False
    replay_cache: ReplayCache = field(default_factory=ReplayCache, compare=False, repr=False)
    u_columns: frozenset = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.delta_t_ms <= 0:
            raise ValueError("delta_t_ms must be positive")
        if len(self.phi) != blocks.BLOCK_SIZE:
            raise ValueError("phi must be one block")
        object.__setattr__(self, "u_columns", frozenset(zip(*self.km.u.entries)))

    @property
    def n(self) -> int:
        return self.km.n

    @property
    def p(self) -> int:
        return self.km.p


@dataclass(frozen=True)
class SmartCard:
    id: str
    k_block: bytes
    v: bytes
    u_col: tuple[int, ...]
    theta: bytes
    n: int
    p: int = MERSENNE_61
    hash_alg: int = HASH_ALG_SHA256

    def __post_init__(self):
        if len(self.u_col) != self.n:
            raise ValueError("u_col length must equal n")
        for b in (self.k_block, self.v, self.theta):
            if len(b) != blocks.BLOCK_SIZE:
                raise ValueError("card blocks must be 32 bytes")


@dataclass(frozen=True)
class LoginRequest:
    id: str
    h_a: bytes
    v: bytes
    u_col: tuple[int, ...]
    s_a: bytes
    t: int


@dataclass(frozen=True)
class ServerResponse:
    m_prime: bytes
    t_prime: int


@dataclass(frozen=True)
class Verdict:
    """Outcome on one side of the handshake; truthy iff accepted."""

    reason: RejectReason | None = None

    @property
    def accepted(self) -> bool:
        return self.reason is None

    def __bool__(self):
        return self.accepted

    def __str__(self):
        return "Accept" if self.reason is None else self.reason.value


ACCEPT = Verdict()


@dataclass(frozen=True)
class ServerEvaluation:
    """Full server-side outcome, including the intermediate values a test
    harness needs (the recovered nonce and the recomputed key)."""

    response: ServerResponse | None
    reason: RejectReason | None
    r_prime: bytes | None = None
    k_yx: int | None = None


def validate_id_format(ident: str) -> bool:
    return blocks.is_valid_id(ident)


def _phi_from_seed(seed: bytes) -> bytes:
    return hashlib.sha256(b"luauth/phi" + seed).digest()


def init_server(seed: bytes, n: int, p: int = MERSENNE_61,
                delta_t_ms: int = DEFAULT_DELTA_T_MS,
                replay_cache_enabled: bool = False) -> ServerState:
    if n < 2:
        raise ValueError("n must be at least 2")
    if delta_t_ms <= 0:
        raise ValueError("delta_t_ms must be positive")
    km = gfmatrix.generate_server_matrices(seed, n, p)
    return ServerState(km, _phi_from_seed(seed), delta_t_ms,
                       replay_cache_enabled=replay_cache_enabled)


def _theta(ident: str, k_block: bytes, password: bytes | str) -> bytes:
    return xor(hash_block(xor(blocks.id_block(ident), k_block)), blocks.pw_block(password))


def register(server: ServerState, ident: str, password: bytes | str, rng: Random) -> SmartCard:
    # validate before drawing so a rejected registration consumes no randomness
    blocks.id_block(ident)
    blocks.pw_block(password)
    n = server.n
    x = rng.randint(1, n)
    y = rng.randint(1, n)
    k_block = encode_field(gfmatrix.derive_key(server.km, x, y))
    return SmartCard(
        id=ident,
        k_block=k_block,
        v=xor(server.phi, encode_index(y, n)),
        u_col=gfmatrix.col(server.km.u, x),
        theta=_theta(ident, k_block, password),
        n=n,
        p=server.p,
    )


def build_login_request(card: SmartCard, entered_pw: bytes | str, now: int, r: bytes) -> LoginRequest:
    """Deterministic core of :func:`card_login` for a given nonce ``r``."""
    h_a = xor(card.k_block, hash_block(r))
    s_a = xor(xor(card.theta, blocks.pw_block(entered_pw)), r)
    return LoginRequest(card.id, h_a, card.v, card.u_col, s_a, now)


def card_login(card: SmartCard, entered_id: str, entered_pw: bytes | str, now: int,
               rng: Random) -> LoginRequest:
    # A wrong password is not caught here; it corrupts S_a and the server rejects.
    if entered_id != card.id:
        raise IdMismatch("entered identity does not match the card")
    blocks.pw_block(entered_pw)
    return build_login_request(card, entered_pw, now, blocks.random_block(rng))


def request_digest(req: LoginRequest) -> bytes:
    h = hashlib.sha256()
    ident = req.id.encode("utf-8")
    h.update(len(ident).to_bytes(2, "big") + ident)
    h.update(req.h_a + req.v + req.s_a)
    h.update(len(req.u_col).to_bytes(2, "big"))
    for k in req.u_col:
        h.update(k.to_bytes(8, "big"))
    h.update(req.t.to_bytes(8, "big"))
    return h.digest()


def _well_formed(req: LoginRequest, n: int, p: int) -> bool:
    return (all(isinstance(b, bytes) and len(b) == blocks.BLOCK_SIZE
                for b in (req.h_a, req.v, req.s_a))
            and isinstance(req.t, int) and 0 <= req.t < 1 << 64
            and len(req.u_col) == n
            and all(0 <= k < p for k in req.u_col))


def evaluate_request(server: ServerState, req: LoginRequest, now: int) -> ServerEvaluation:
    def reject(reason, **kw):
        log.debug("rejecting login for %r: %s", req.id, reason.value)
        return ServerEvaluation(None, reason, **kw)

    if not _well_formed(req, server.n, server.p):
        return reject(RejectReason.MALFORMED)
    if not validate_id_format(req.id):
        return reject(RejectReason.BAD_ID_FORMAT)
    # future-dated requests count as stale too
    if not 0 <= now - req.t <= server.delta_t_ms:
        return reject(RejectReason.STALE_TIMESTAMP)
    try:
        y = blocks.decode_index(xor(req.v, server.phi), server.n)
    except BadIndex:
        return reject(RejectReason.BAD_INDEX)
    # Row y of L is zero past column y, so entries of u_col below index y never
    # reach K_yx; without this check they could be altered freely.
    if tuple(req.u_col) not in server.u_columns:
        return reject(RejectReason.MALFORMED)

    k_yx = gfmatrix.dot(gfmatrix.row(server.km.l, y), req.u_col, server.p)
    k_block = encode_field(k_yx)
    t = hash_block(xor(blocks.id_block(req.id), k_block))
    r_prime = xor(t, req.s_a)
    recovered = xor(req.h_a, hash_block(r_prime))
    if recovered != k_block:
        return reject(RejectReason.KEY_MISMATCH, r_prime=r_prime, k_yx=k_yx)

    if server.replay_cache_enabled:
        fresh = server.replay_cache.check_and_record(
            request_digest(req), req.t + server.delta_t_ms, now)
        if not fresh:
            return reject(RejectReason.REPLAY_DETECTED, r_prime=r_prime, k_yx=k_yx)

    m_prime = hash_block(xnor(k_block, encode_timestamp(now)))
    return ServerEvaluation(ServerResponse(m_prime, now), None, r_prime=r_prime, k_yx=k_yx)


def server_authenticate(server: ServerState, req: LoginRequest,
                        now: int) -> ServerResponse | RejectReason:
    ev = evaluate_request(server, req, now)
    return ev.response if ev.response is not None else ev.reason


def card_verify_server(card: SmartCard, resp: ServerResponse, now: int,
                       delta_t_ms: int = DEFAULT_DELTA_T_MS) -> Verdict:
    if not 0 <= now - resp.t_prime <= delta_t_ms:
        return Verdict(RejectReason.STALE_TIMESTAMP)
    expected = hash_block(xnor(card.k_block, encode_timestamp(resp.t_prime)))
    if expected != resp.m_prime:
        return Verdict(RejectReason.KEY_MISMATCH)
    return ACCEPT
