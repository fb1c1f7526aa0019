"""Linear network coding over GF(2).

A generation of ``k`` equal-length payloads is expanded into the ``2**k - 1``
nonzero XOR combinations. Coefficient vectors are stored as integers whose
most significant of ``k`` bits selects payload 0, so ``"01"`` (value 1)
selects the second payload of a two-packet generation.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

MAX_K = 16
# Largest k for which decode_bounds enumerates raw subsets; beyond that it
# enumerates hyperplanes, which is equivalent and tractable up to k = 8.
_SUBSET_ENUMERATION_MAX_K = 4
_BOUNDS_MAX_K = 8


@dataclass(frozen=True, order=True)
class CoefficientVector:
    bits: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= MAX_K:
            raise ValueError(f"generation size {self.k} outside [1, {MAX_K}]")
        if not 0 < self.bits < (1 << self.k):
            raise ValueError(f"coefficient {self.bits} is zero or wider than {self.k} bits")

    def selects(self, index: int) -> bool:
        return bool((self.bits >> (self.k - 1 - index)) & 1)

    def __str__(self):
        return format(self.bits, f"0{self.k}b")

    @classmethod
    def parse(cls, text: str) -> "CoefficientVector":
        return cls(int(text, 2), len(text))


@dataclass(frozen=True)
class Generation:
    id: int
    payloads: tuple[bytes, ...]

    def __post_init__(self):
        object.__setattr__(self, "payloads", tuple(bytes(p) for p in self.payloads))
        if not self.payloads:
            raise ValueError("generation needs at least one payload")
        if len({len(p) for p in self.payloads}) != 1:
            raise ValueError("all payloads in a generation must have the same length")

    @property
    def k(self) -> int:
        return len(self.payloads)


@dataclass(frozen=True)
class CodedPacket:
    generation_id: int
    coefficients: CoefficientVector
    payload: bytes


def enumerate_coefficients(k: int) -> list[CoefficientVector]:
    """All nonzero ``k``-bit vectors in ascending integer order."""
    if not 1 <= k <= MAX_K:
        raise ValueError(f"generation size {k} outside [1, {MAX_K}]")
    return [CoefficientVector(b, k) for b in range(1, 1 << k)]


def _xor(blocks: Iterable[bytes], length: int) -> bytes:
    acc = 0
    for b in blocks:
        acc ^= int.from_bytes(b, "big")
    return acc.to_bytes(length, "big")


def encode(gen: Generation) -> list[CodedPacket]:
    size = len(gen.payloads[0])
    out = []
    for c in enumerate_coefficients(gen.k):
        chosen = (p for idx, p in enumerate(gen.payloads) if c.selects(idx))
        out.append(CodedPacket(gen.id, c, _xor(chosen, size)))
    return out


def _bits(v) -> int:
    return v.bits if isinstance(v, CoefficientVector) else int(v)


def gf2_rank(vectors: Iterable) -> int:
    """Rank over GF(2) of integer or :class:`CoefficientVector` rows."""
    basis: dict[int, int] = {}  # leading bit -> row
    for v in vectors:
        x = _bits(v)
        while x:
            lead = x.bit_length() - 1
            if lead not in basis:
                basis[lead] = x
                break
            x ^= basis[lead]
    return len(basis)


def is_decodable(received: Iterable, k: int) -> bool:
    return gf2_rank(received) == k


def decode(packets: Sequence[CodedPacket], k: int) -> list[bytes]:
    """Recover the ``k`` source payloads by Gauss-Jordan elimination on coefficient||payload rows."""
    if not packets:
        raise ValueError("nothing to decode")
    size = len(packets[0].payload)
    # Each row packs coefficients above the payload bits so one XOR updates both.
    shift = 8 * size
    rows = [(_bits(p.coefficients) << shift) | int.from_bytes(p.payload, "big") for p in packets]
    pivots: list[int] = []
    for col in range(k):
        bit = 1 << (shift + k - 1 - col)
        r = next((r for r in range(len(pivots), len(rows)) if rows[r] & bit), None)
        if r is None:
            raise ValueError(f"received packets have rank < {k}; generation not decodable")
        top = len(pivots)
        rows[top], rows[r] = rows[r], rows[top]
        for other in range(len(rows)):
            if other != top and rows[other] & bit:
                rows[other] ^= rows[top]
        pivots.append(top)
    mask = (1 << shift) - 1
    return [(rows[p] & mask).to_bytes(size, "big") for p in pivots]


def decode_bounds(k: int) -> tuple[int, int]:
    """Fewest and most coded packets needed to guarantee decoding.

    ``min`` is the size of the smallest full-rank subset of the nonzero
    vectors; ``max`` is one more than the largest rank-deficient subset.
    """
    if not 1 <= k <= _BOUNDS_MAX_K:
        raise ValueError(f"decode_bounds supports 1 <= k <= {_BOUNDS_MAX_K}, got {k}")
    vectors = list(range(1, 1 << k))
    if k <= _SUBSET_ENUMERATION_MAX_K:
        sizes = range(len(vectors) + 1)
        lo = min(s for s in sizes if any(gf2_rank(c) == k for c in combinations(vectors, s)))
        largest_deficient = max(s for s in sizes if any(gf2_rank(c) < k for c in combinations(vectors, s)))
        return lo, largest_deficient + 1
    # rank <= size, and the unit vectors are a basis
    unit = [1 << b for b in range(k)]
    lo = k if gf2_rank(unit) == k else None
    # A rank-deficient set lies inside some hyperplane {v : <u, v> = 0}, u != 0.
    largest_deficient = max(
        sum(1 for v in vectors if bin(u & v).count("1") % 2 == 0) for u in vectors
    )
    return lo, largest_deficient + 1
