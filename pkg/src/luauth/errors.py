"""Exception hierarchy shared by all luauth modules."""

from __future__ import annotations

import enum


class LuAuthError(Exception):
    """Base class for every error raised by this package."""


# -- field / matrix --------------------------------------------------------

class PoolExhausted(LuAuthError):
    pass


class InsufficientPool(LuAuthError):
    pass


class SingularError(LuAuthError):
    """A zero pivot was met during elimination.

    ``k`` is the 1-based index of the offending pivot, i.e. the first
    leading principal minor that is singular mod p.
    """

    def __init__(self, k: int):
        super().__init__(f"pivot {k} is zero mod p")
        self.k = k


class NotInvertible(LuAuthError):
    pass


class GenerationFailed(LuAuthError):
    pass


class IndexOutOfRange(LuAuthError):
    pass


class LengthMismatch(LuAuthError):
    pass


# -- blocks ----------------------------------------------------------------

class BadIdFormat(LuAuthError):
    pass


class BadPassword(LuAuthError):
    pass


class BadIndex(LuAuthError):
    pass


# -- protocol / transport --------------------------------------------------

class IdMismatch(LuAuthError):
    pass


class Malformed(LuAuthError):
    pass


# -- store -----------------------------------------------------------------

class StoreErrorKind(enum.Enum):
    BAD_MAGIC = "BadMagic"
    BAD_VERSION = "BadVersion"
    DIGEST_MISMATCH = "DigestMismatch"
    INVARIANT_VIOLATION = "InvariantViolation"
    TRUNCATED = "Truncated"


class StoreError(LuAuthError):
    def __init__(self, kind: StoreErrorKind, detail: str = ""):
        msg = kind.value if not detail else f"{kind.value}: {detail}"
        super().__init__(msg)
        self.kind = kind
