"""Exact matrix arithmetic over GF(p) and the server's symmetric key matrix.

Field elements are plain ``int`` values in ``[0, p)``.  Matrices are
immutable and stored row-major with 0-based tuples internally; the public
``row``/``col``/``derive_key`` accessors take 1-based indices because the
protocol's row and column numbers are 1-based.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

from . import blocks
from .errors import (
    GenerationFailed,
    IndexOutOfRange,
    InsufficientPool,
    LengthMismatch,
    NotInvertible,
    PoolExhausted,
    SingularError,
)

MERSENNE_61 = (1 << 61) - 1
DEFAULT_MAX_ATTEMPTS = 1000


def inverse(a: int, p: int) -> int:
    """Multiplicative inverse mod p by the extended Euclidean algorithm."""
    a %= p
    if a == 0:
        raise NotInvertible("0 has no inverse")
    old_r, r = a, p
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    if old_r != 1:
        raise NotInvertible(f"{a} is not invertible mod {p}")
    return old_s % p


def is_prime(p: int) -> bool:
    """Deterministic Miller-Rabin, exact for all p < 3.3e24."""
    if p < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    if p in small:
        return True
    if any(p % q == 0 for q in small):
        return False
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldMatrix:
    n: int
    p: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("matrix dimension must be at least 1")
        if len(self.entries) != self.n or any(len(r) != self.n for r in self.entries):
            raise ValueError(f"entries must form a {self.n}x{self.n} grid")
        for r in self.entries:
            for v in r:
                if not 0 <= v < self.p:
                    raise ValueError(f"entry {v} outside [0, {self.p})")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], p: int) -> FieldMatrix:
        return cls(len(rows), p, tuple(tuple(v % p for v in r) for r in rows))

    @classmethod
    def identity(cls, n: int, p: int) -> FieldMatrix:
        return cls(n, p, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def __matmul__(self, other: FieldMatrix) -> FieldMatrix:
        if self.n != other.n or self.p != other.p:
            raise LengthMismatch("matrices differ in dimension or modulus")
        cols = list(zip(*other.entries))
        p = self.p
        return FieldMatrix(self.n, p, tuple(
            tuple(sum(x * y for x, y in zip(r, c)) % p for c in cols)
            for r in self.entries
        ))

    def is_symmetric(self) -> bool:
        return all(self.entries[i][j] == self.entries[j][i]
                   for i in range(self.n) for j in range(i))

    def upper_triangle(self) -> list[int]:
        """Entries with i <= j, row by row."""
        return [self.entries[i][j] for i in range(self.n) for j in range(i, self.n)]


@dataclass(frozen=True)
class KeyMatrix:
    """Symmetric master matrix ``a`` with its Doolittle factors ``l``, ``u``."""

    a: FieldMatrix
    l: FieldMatrix
    u: FieldMatrix
    seed: bytes
    rejection_count: int = 0

    @property
    def n(self) -> int:
        return self.a.n

    @property
    def p(self) -> int:
        return self.a.p

    def invariant_violations(self) -> list[str]:
        n = self.n
        out = []
        if not self.a.is_symmetric():
            out.append("a is not symmetric")
        L, U = self.l.entries, self.u.entries
        if any(L[i][j] for i in range(n) for j in range(i + 1, n)):
            out.append("l has entries above the diagonal")
        if any(L[i][i] != 1 for i in range(n)):
            out.append("l does not have a unit diagonal")
        if any(U[i][j] for i in range(n) for j in range(i)):
            out.append("u has entries below the diagonal")
        if self.l @ self.u != self.a:
            out.append("l*u != a")
        upper = self.a.upper_triangle()
        if 0 in upper or len(set(upper)) != len(upper):
            out.append("upper-triangle entries of a are not distinct and nonzero")
        return out


def _pool_candidates(seed: bytes, p: int):
    """Endless stream of candidate residues in [1, p) derived from ``seed``.

    Counter-mode: block ``ctr`` is F_h(seed XOR ctr), cut into 8-byte words,
    each masked to the bit length of p; out-of-range words are rejected so
    the survivors are uniform.
    """
    mask = (1 << p.bit_length()) - 1
    ctr = 0
    while True:
        digest = blocks.hash_block(blocks.xor(seed, blocks.encode_field(ctr)))
        for off in range(0, blocks.BLOCK_SIZE, 8):
            v = int.from_bytes(digest[off:off + 8], "big") & mask
            if 0 < v < p:
                yield v
        ctr += 1


def gen_key_pool(seed: bytes, count: int, p: int) -> list[int]:
    if len(seed) != blocks.BLOCK_SIZE:
        raise ValueError("seed must be 32 bytes")
    if count < 0:
        raise ValueError("count must be non-negative")
    if count > p - 1:
        raise PoolExhausted(f"only {p - 1} nonzero residues exist mod {p}, {count} requested")
    pool: list[int] = []
    seen: set[int] = set()
    if count == 0:
        return pool
    for v in _pool_candidates(seed, p):
        if v not in seen:
            seen.add(v)
            pool.append(v)
            if len(pool) == count:
                break
    return pool


def build_symmetric_matrix(pool: Sequence[int], n: int, p: int = MERSENNE_61) -> FieldMatrix:
    need = n * (n + 1) // 2
    if len(pool) < need:
        raise InsufficientPool(f"{need} keys needed for n={n}, pool has {len(pool)}")
    grid = [[0] * n for _ in range(n)]
    it = iter(pool)
    for i in range(n):
        for j in range(i, n):
            grid[i][j] = grid[j][i] = next(it)
    return FieldMatrix.from_rows(grid, p)


def lu_decompose(a: FieldMatrix) -> tuple[FieldMatrix, FieldMatrix]:
    """Doolittle LU over GF(p) without pivoting.

    Row swaps are not allowed: they would renumber the rows and columns whose
    indices the protocol hands out to users.
    """
    n, p = a.n, a.p
    u = a.tolist()
    l = [[int(i == j) for j in range(n)] for i in range(n)]
    for k in range(n):
        pivot = u[k][k]
        if pivot == 0:
            raise SingularError(k + 1)
        inv = inverse(pivot, p)
        urow = u[k]
        for i in range(k + 1, n):
            f = u[i][k] * inv % p
            l[i][k] = f
            if f:
                ui = u[i]
                for j in range(k + 1, n):
                    ui[j] = (ui[j] - f * urow[j]) % p
            u[i][k] = 0
    return FieldMatrix.from_rows(l, p), FieldMatrix.from_rows(u, p)


def _attempt_seed(seed: bytes, attempt: int) -> bytes:
    if attempt == 0:
        return seed
    return hashlib.sha256(seed + attempt.to_bytes(8, "big")).digest()


def generate_server_matrices(seed: bytes, n: int, p: int = MERSENNE_61,
                             max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> KeyMatrix:
    if n < 2:
        raise ValueError("n must be at least 2")
    need = n * (n + 1) // 2
    if need > p - 1:
        raise PoolExhausted(f"n={n} needs {need} distinct nonzero keys, GF({p}) has {p - 1}")
    for attempt in range(max_attempts):
        pool = gen_key_pool(_attempt_seed(seed, attempt), need, p)
        a = build_symmetric_matrix(pool, n, p)
        try:
            l, u = lu_decompose(a)
        except SingularError:
            continue
        return KeyMatrix(a, l, u, bytes(seed), attempt)
    raise GenerationFailed(f"no nonsingular matrix in {max_attempts} attempts")


def row(m: FieldMatrix, i: int) -> tuple[int, ...]:
    if not 1 <= i <= m.n:
        raise IndexOutOfRange(f"row {i} outside [1, {m.n}]")
    return m.entries[i - 1]


def col(m: FieldMatrix, j: int) -> tuple[int, ...]:
    if not 1 <= j <= m.n:
        raise IndexOutOfRange(f"column {j} outside [1, {m.n}]")
    return tuple(r[j - 1] for r in m.entries)


def dot(u: Sequence[int], v: Sequence[int], p: int) -> int:
    if len(u) != len(v):
        raise LengthMismatch(f"vectors of length {len(u)} and {len(v)}")
    return sum(a * b for a, b in zip(u, v)) % p


def derive_key(km: KeyMatrix, x: int, y: int) -> int:
    """Pairwise key K_xy: row x of L times column y of U (equals a[x][y])."""
    return dot(row(km.l, x), col(km.u, y), km.p)
