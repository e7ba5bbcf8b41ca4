"""Deterministic simulated channel and the recorded handshake driver."""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Callable

from .. import blocks, protocol
from ..errors import Malformed
from ..protocol import LoginRequest, RejectReason, ServerResponse, ServerState, SmartCard
from . import codec

TamperHook = Callable[[bytes], bytes]

DROPPED = "Dropped"


class SimClock:
    """Millisecond clock that only moves when told to."""

    def __init__(self, start_millis: int = 0):
        self._now = start_millis

    def now(self) -> int:
        return self._now

    def advance(self, ms: int) -> int:
        if ms < 0:
            raise ValueError("clock cannot move backwards")
        self._now += ms
        return self._now


@dataclass
class Channel:
    """An insecure link: every frame is delayed by ``delay_ms`` and passed
    through ``tamper_hook`` in flight.  With ``drop`` set, nothing arrives."""

    delay_ms: int = 0
    tamper_hook: TamperHook | None = None
    drop: bool = False

    def __post_init__(self):
        if self.delay_ms < 0:
            raise ValueError("delay_ms must be non-negative")

    def carry(self, frame: bytes, clock: SimClock) -> bytes | None:
        clock.advance(self.delay_ms)
        if self.drop:
            return None
        if self.tamper_hook is not None:
            frame = self.tamper_hook(frame)
        return frame


def flip_byte(position: int, mask: int = 0xFF) -> TamperHook:
    """Tamper hook XOR-ing ``mask`` into one absolute byte of request frames."""

    def hook(frame: bytes) -> bytes:
        if frame[5] != codec.MSG_LOGIN_REQUEST or position >= len(frame):
            return frame
        out = bytearray(frame)
        out[position] ^= mask
        return bytes(out)

    return hook


def flip_request_field(field: str, offset: int = 0, mask: int = 0xFF) -> TamperHook:
    """Tamper hook XOR-ing ``mask`` into byte ``offset`` of a named request field."""

    def hook(frame: bytes) -> bytes:
        if frame[5] != codec.MSG_LOGIN_REQUEST:
            return frame
        req = codec.decode_login_request(frame)
        start, end = codec.login_request_offsets(req)[field]
        if not 0 <= offset < end - start:
            raise IndexError(f"offset {offset} outside field {field}")
        out = bytearray(frame)
        out[start + offset] ^= mask
        return bytes(out)

    return hook


@dataclass(frozen=True)
class Transcript:
    request: LoginRequest
    request_frame: bytes
    delivered_request_frame: bytes | None
    response: ServerResponse | RejectReason | None
    response_frame: bytes | None
    delivered_response_frame: bytes | None
    card_r: bytes
    server_r_prime: bytes | None
    server_k: int | None
    server_verdict: str
    card_verdict: str
    t_sent: int
    t_server: int | None
    t_card: int | None

    @property
    def accepted(self) -> bool:
        return self.server_verdict == "Accept" and self.card_verdict == "Accept"

    def to_lines(self) -> list[str]:
        """One ``key=value`` line per recorded field."""
        def hx(b):
            return "" if b is None else b.hex()

        req = self.request
        resp = self.response
        lines = {
            "id": req.id,
            "h_a": req.h_a.hex(),
            "v": req.v.hex(),
            "u_col": ",".join(str(k) for k in req.u_col),
            "s_a": req.s_a.hex(),
            "t": req.t,
            "request_frame": self.request_frame.hex(),
            "card_r": self.card_r.hex(),
            "server_r_prime": hx(self.server_r_prime),
            "response_type": ("none" if resp is None else
                              "reject" if isinstance(resp, RejectReason) else "response"),
            "m_prime": hx(resp.m_prime) if isinstance(resp, ServerResponse) else "",
            "t_prime": resp.t_prime if isinstance(resp, ServerResponse) else "",
            "response_frame": hx(self.response_frame),
            "t_sent": self.t_sent,
            "t_server": "" if self.t_server is None else self.t_server,
            "t_card": "" if self.t_card is None else self.t_card,
            "server_verdict": self.server_verdict,
            "card_verdict": self.card_verdict,
        }
        return [f"{k}={v}" for k, v in lines.items()]


def run_handshake(server: ServerState, card: SmartCard, password: bytes | str,
                  channel: Channel | None = None, clock: SimClock | None = None,
                  rng: Random | None = None) -> Transcript:
    """Drive one full login over ``channel`` and record every step.

    Failures never raise; they show up as verdict strings on the transcript.
    """
    channel = channel or Channel()
    clock = clock or SimClock()
    rng = rng or Random(0)

    r = blocks.random_block(rng)
    t_sent = clock.now()
    req = protocol.build_login_request(card, password, t_sent, r)
    req_frame = codec.encode_login_request(req)

    delivered = channel.carry(req_frame, clock)
    rec = dict(request=req, request_frame=req_frame, delivered_request_frame=delivered,
               card_r=r, t_sent=t_sent)
    if delivered is None:
        return Transcript(**rec, response=None, response_frame=None,
                          delivered_response_frame=None, server_r_prime=None, server_k=None,
                          server_verdict=DROPPED, card_verdict=DROPPED,
                          t_server=None, t_card=None)

    t_server = clock.now()
    try:
        got = codec.decode_login_request(delivered, server.p)
    except Malformed:
        ev = protocol.ServerEvaluation(None, RejectReason.MALFORMED)
    else:
        ev = protocol.evaluate_request(server, got, t_server)
    if ev.response is not None:
        response = ev.response
        resp_frame = codec.encode_server_response(response)
        server_verdict = "Accept"
    else:
        response = ev.reason
        resp_frame = codec.encode_reject(ev.reason)
        server_verdict = ev.reason.value
    rec.update(response=response, response_frame=resp_frame, server_r_prime=ev.r_prime,
               server_k=ev.k_yx, server_verdict=server_verdict, t_server=t_server)

    back = channel.carry(resp_frame, clock)
    rec["delivered_response_frame"] = back
    if back is None:
        return Transcript(**rec, card_verdict=DROPPED, t_card=None)
    t_card = clock.now()
    card_verdict = card_receive(card, back, t_card, server.delta_t_ms)
    return Transcript(**rec, card_verdict=str(card_verdict), t_card=t_card)


def card_receive(card: SmartCard, frame: bytes, now: int,
                 delta_t_ms: int = protocol.DEFAULT_DELTA_T_MS) -> protocol.Verdict:
    """Card-side handling of whatever frame arrives after a login."""
    try:
        reply = codec.decode_reply(frame)
    except Malformed:
        return protocol.Verdict(RejectReason.MALFORMED)
    if isinstance(reply, RejectReason):
        return protocol.Verdict(reply)
    return protocol.card_verify_server(card, reply, now, delta_t_ms)


def server_receive(server: ServerState, frame: bytes,
                   now: int) -> ServerResponse | RejectReason:
    """Server-side handling of a raw frame."""
    try:
        req = codec.decode_login_request(frame, server.p)
    except Malformed:
        return RejectReason.MALFORMED
    return protocol.server_authenticate(server, req, now)
