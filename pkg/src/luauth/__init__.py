"""Bilateral smart-card remote user authentication over an LU-factored
symmetric key matrix."""

from .gfmatrix import MERSENNE_61, FieldMatrix, KeyMatrix, derive_key, generate_server_matrices
from .protocol import (
    LoginRequest,
    RejectReason,
    ServerResponse,
    ServerState,
    SmartCard,
    card_login,
    card_verify_server,
    init_server,
    register,
    server_authenticate,
)

__version__ = "0.1.0"
