"""Adversary toolkit: replay, forgery, eavesdropping, tampering, online
password guessing and interleaved parallel sessions.

Every attack returns counts of what the server or card accepted so that
callers can compare against the expected outcome.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from random import Random

from .. import blocks, protocol
from ..protocol import RejectReason, ServerResponse, ServerState, SmartCard
from . import codec
from .channel import SimClock, Transcript, card_receive, run_handshake, server_receive

TAMPER_FIELDS = ("id", "h_a", "v", "u_col", "s_a")
KNOWLEDGE_KEYS = ("id", "h_a", "v", "u_col", "s_a", "t", "m_prime", "t_prime")


def verdict_of(result: ServerResponse | RejectReason) -> str:
    return "Accept" if isinstance(result, ServerResponse) else result.value


def attack_replay(transcript: Transcript, server: ServerState, now: int) -> str:
    """Resubmit the recorded request frame, byte for byte, at ``now``."""
    return verdict_of(server_receive(server, transcript.request_frame, now))


def attack_eavesdrop(transcript: Transcript) -> dict:
    """Everything a passive observer of both frames learns, and nothing else."""
    req = codec.decode_login_request(transcript.request_frame)
    knowledge = {
        "id": req.id, "h_a": req.h_a, "v": req.v, "u_col": req.u_col,
        "s_a": req.s_a, "t": req.t, "m_prime": None, "t_prime": None,
    }
    if transcript.response_frame is not None:
        reply = codec.decode_reply(transcript.response_frame)
        if isinstance(reply, ServerResponse):
            knowledge["m_prime"] = reply.m_prime
            knowledge["t_prime"] = reply.t_prime
    return knowledge


def attack_forge(knowledge: dict, target_id: str, server: ServerState, now: int,
                 rng: Random, trials: int) -> int:
    """Submit ``trials`` requests built from observed ``v``/``u_col`` plus
    fresh random ``h_a``/``s_a``; return how many the server accepts."""
    accepts = 0
    for _ in range(trials):
        req = protocol.LoginRequest(
            target_id, blocks.random_block(rng), knowledge["v"], tuple(knowledge["u_col"]),
            blocks.random_block(rng), now)
        if isinstance(server_receive(server, codec.encode_login_request(req), now),
                      ServerResponse):
            accepts += 1
    return accepts


def attack_forge_blind(target_id: str, server: ServerState, now: int, rng: Random,
                       trials: int) -> int:
    """Forgery with no observed traffic: every field random."""
    accepts = 0
    for _ in range(trials):
        u_col = tuple(rng.randrange(server.p) for _ in range(server.n))
        req = protocol.LoginRequest(
            target_id, blocks.random_block(rng), blocks.random_block(rng), u_col,
            blocks.random_block(rng), now)
        if isinstance(protocol.server_authenticate(server, req, now), ServerResponse):
            accepts += 1
    return accepts


@dataclass
class TamperResult:
    field: str
    trials: int
    accepts: int
    reasons: dict


def attack_tamper(server: ServerState, card: SmartCard, password: bytes | str, field: str,
                  trials: int, rng: Random, now: int) -> TamperResult:
    """Corrupt one random byte of ``field`` in fresh honest requests."""
    reasons: dict[str, int] = {}
    accepts = 0
    for _ in range(trials):
        req = protocol.build_login_request(card, password, now, blocks.random_block(rng))
        frame = bytearray(codec.encode_login_request(req))
        start, end = codec.login_request_offsets(req)[field]
        frame[rng.randrange(start, end)] ^= rng.randrange(1, 256)
        verdict = verdict_of(server_receive(server, bytes(frame), now))
        reasons[verdict] = reasons.get(verdict, 0) + 1
        accepts += verdict == "Accept"
    return TamperResult(field, trials, accepts, reasons)


def attack_password_guess(server: ServerState, card: SmartCard, password: bytes | str,
                          trials: int, rng: Random, now: int) -> int:
    """Online guessing with the stolen card: each guess is a wrong password."""
    real = blocks.pw_block(password)
    accepts = 0
    for _ in range(trials):
        guess = rng.randbytes(rng.randint(1, 24))
        if blocks.pw_block(guess) == real:
            continue
        req = protocol.build_login_request(card, guess, now, blocks.random_block(rng))
        accepts += isinstance(protocol.server_authenticate(server, req, now), ServerResponse)
    return accepts


@dataclass
class ParallelResult:
    sessions: int
    honest_accepts: int
    injected: int
    injected_accepts: int
    cross_accepts: int
    outcomes: dict


def _distinct_key_cards(server: ServerState, sessions: int, rng: Random):
    """Register ``sessions`` users whose pairwise keys are all different.

    Two cards holding the same K are interchangeable by construction, so a
    session-binding test is only meaningful between distinct keys.
    """
    limit = server.n * (server.n + 1) // 2
    if sessions > limit:
        raise ValueError(f"at most {limit} distinct keys exist for n={server.n}")
    cards, passwords, keys = [], [], set()
    i = 0
    while len(cards) < sessions:
        pw = f"pw-{i}-{rng.getrandbits(32):08x}"
        card = protocol.register(server, f"session-{len(cards)}", pw, rng)
        i += 1
        if card.k_block in keys:
            continue
        keys.add(card.k_block)
        cards.append(card)
        passwords.append(pw)
    return cards, passwords


def attack_parallel_sessions(server: ServerState, sessions: int, rng: Random,
                             start_millis: int) -> ParallelResult:
    """Run interleaved honest sessions and inject reflected and cross-wired
    messages between them.

    Injections:
      * each response frame reflected back to the server as if a request;
      * each request frame reflected to its own card as if a response;
      * every response delivered to every other session's card;
      * each request re-labelled with another session's identity;
      * each request with H_a replaced by its session's M'.
    """
    clock = SimClock(start_millis)
    cards, passwords = _distinct_key_cards(server, sessions, rng)

    # all cards send first, one millisecond apart
    requests = []
    for card, pw in zip(cards, passwords):
        req = protocol.build_login_request(card, pw, clock.now(), blocks.random_block(rng))
        requests.append(codec.encode_login_request(req))
        clock.advance(1)

    # the server answers in shuffled order
    order = list(range(sessions))
    rng.shuffle(order)
    responses: list[bytes] = [b""] * sessions
    for i in order:
        reply = server_receive(server, requests[i], clock.now())
        responses[i] = (codec.encode_server_response(reply) if isinstance(reply, ServerResponse)
                        else codec.encode_reject(reply))
        clock.advance(1)

    now = clock.now()
    honest = sum(bool(card_receive(cards[i], responses[i], now, server.delta_t_ms))
                 for i in range(sessions))

    outcomes: dict[str, int] = {}
    injected = injected_accepts = cross = 0

    def record(kind, accepted):
        nonlocal injected, injected_accepts
        injected += 1
        injected_accepts += accepted
        key = f"{kind}:{'accept' if accepted else 'reject'}"
        outcomes[key] = outcomes.get(key, 0) + 1

    for i in range(sessions):
        record("response-to-server",
               isinstance(server_receive(server, responses[i], now), ServerResponse))
        record("request-to-card", bool(card_receive(cards[i], requests[i], now,
                                                    server.delta_t_ms)))
    for i, j in itertools.permutations(range(sessions), 2):
        ok = bool(card_receive(cards[i], responses[j], now, server.delta_t_ms))
        cross += ok
        record("cross-response", ok)
    for i in range(sessions):
        req = codec.decode_login_request(requests[i], server.p)
        other = cards[(i + 1) % sessions].id
        relabelled = replace(req, id=other)
        ok = isinstance(server_receive(server, codec.encode_login_request(relabelled), now),
                        ServerResponse)
        cross += ok
        record("relabelled-request", ok)
        reply = codec.decode_reply(responses[i])
        if isinstance(reply, ServerResponse):
            reflected = replace(req, h_a=reply.m_prime)
            record("m_prime-as-h_a", isinstance(
                server_receive(server, codec.encode_login_request(reflected), now),
                ServerResponse))
    return ParallelResult(sessions, honest, injected, injected_accepts, cross, outcomes)


@dataclass
class AttackRow:
    attack: str
    trials: int
    accepts: int
    expected: int
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.accepts == self.expected


SUITES = ("replay", "forge", "eavesdrop-forge", "tamper", "password-guess", "parallel-session")


def run_attack_suite(server: ServerState, card: SmartCard, password: bytes | str,
                     now: int, rng: Random, trials: int = 100,
                     suites: tuple[str, ...] = SUITES) -> list[AttackRow]:
    if trials < 1:
        raise ValueError("trials must be positive")
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    rows = []
    delta = server.delta_t_ms
    honest = run_handshake(server, card, password, clock=SimClock(now), rng=rng)
    if not honest.accepted:
        raise ValueError(f"honest handshake failed ({honest.server_verdict}/"
                         f"{honest.card_verdict}); check the card and password")

    if "replay" in suites:
        t = honest.request.t
        stale = attack_replay(honest, server, t + delta + 1)
        rows.append(AttackRow("replay-stale", 1, int(stale == "Accept"), 0, stale))
        inside = attack_replay(honest, server, t + 1)
        if server.replay_cache_enabled:
            rows.append(AttackRow("replay-window", 1, int(inside == "Accept"), 0, inside))
        else:
            rows.append(AttackRow("replay-window", 1, int(inside == "Accept"), 1,
                                  f"{inside} (scheme as written: window is the only defence)"))
    if "forge" in suites:
        rows.append(AttackRow("forge", trials,
                              attack_forge_blind(card.id, server, now, rng, trials), 0))
    if "eavesdrop-forge" in suites:
        knowledge = attack_eavesdrop(honest)
        rows.append(AttackRow("eavesdrop-forge", trials,
                              attack_forge(knowledge, knowledge["id"], server, now, rng,
                                           trials), 0))
    if "tamper" in suites:
        for f in TAMPER_FIELDS:
            res = attack_tamper(server, card, password, f, trials, rng, now)
            rows.append(AttackRow(f"tamper-{f}", trials, res.accepts, 0,
                                  ",".join(f"{k}:{v}" for k, v in sorted(res.reasons.items()))))
    if "password-guess" in suites:
        rows.append(AttackRow("password-guess", trials,
                              attack_password_guess(server, card, password, trials, rng, now),
                              0))
    if "parallel-session" in suites:
        sessions = min(8, server.n * (server.n + 1) // 2)
        res = attack_parallel_sessions(server, sessions, rng, now + 10 * delta)
        rows.append(AttackRow("parallel-honest", sessions, res.honest_accepts, sessions))
        rows.append(AttackRow("parallel-injected", res.injected, res.injected_accepts, 0,
                              f"cross-session accepts {res.cross_accepts}"))
    return rows
