"""Wire codec, simulated channel and adversary toolkit."""

from .attacks import (
    KNOWLEDGE_KEYS,
    SUITES,
    TAMPER_FIELDS,
    AttackRow,
    ParallelResult,
    TamperResult,
    attack_eavesdrop,
    attack_forge,
    attack_forge_blind,
    attack_parallel_sessions,
    attack_password_guess,
    attack_replay,
    attack_tamper,
    run_attack_suite,
)
from .channel import (
    Channel,
    SimClock,
    Transcript,
    card_receive,
    flip_byte,
    flip_request_field,
    run_handshake,
    server_receive,
)
from .codec import (
    decode_login_request,
    decode_reject,
    decode_reply,
    decode_server_response,
    encode_login_request,
    encode_reject,
    encode_server_response,
    login_request_offsets,
)
