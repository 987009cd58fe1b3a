"""Bit strings and the scalar helpers everything else builds on.

Positions are 0-based internally. Anything written for humans (CSV, JSON,
CLI output) converts to 1-based positions at the boundary.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from . import _kernels


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy h(x) in bits, with h(0) = h(1) = 0."""
    x = float(x)
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValueError(f"binary_entropy needs 0 <= x <= 1, got {x!r}")
    # endpoint guards instead of relying on 0 * log(0); -x*log2(x) stays finite for subnormal x
    out = 0.0
    if x > 0.0:
        out -= x * math.log2(x)
    if x < 1.0:
        out -= (1.0 - x) * math.log2(1.0 - x)
    return out


class BitString:
    """Immutable bit string stored as MSB-first packed bytes.

    Only logical bits are visible; padding in the final byte is always zero.
    """

    __slots__ = ("_packed", "_length")

    def __init__(self, packed: np.ndarray, length: int):
        packed = np.array(packed, dtype=np.uint8)
        if length < 0 or packed.size != (length + 7) // 8:
            raise ValueError("packed buffer does not match length")
        pad = (-length) % 8
        if pad and packed.size and packed[-1] & ((1 << pad) - 1):
            packed[-1] &= 0xFF ^ ((1 << pad) - 1)
        packed.setflags(write=False)
        self._packed = packed
        self._length = int(length)

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> "BitString":
        arr = np.asarray(bits if isinstance(bits, np.ndarray) else list(bits), dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(np.packbits(arr), arr.size)

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        s = s.replace(" ", "").replace("_", "")
        if set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        return cls.from_bits(np.frombuffer(s.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(np.zeros((length + 7) // 8, dtype=np.uint8), length)

    @classmethod
    def from_hex(cls, hexstr: str, length: int) -> "BitString":
        return cls(np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8).copy(), length)

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    @property
    def bits(self) -> np.ndarray:
        return np.unpackbits(self._packed, count=self._length)

    def __len__(self) -> int:
        return self._length

    def weight(self) -> int:
        return _kernels.popcount(self._packed)

    def take(self, t: "IndexSubset") -> "BitString":
        if t.parent_length != self._length:
            raise ValueError("subset parent length does not match string length")
        return BitString.from_bits(self.bits[t.indices])

    def truncate(self, length: int) -> "BitString":
        """Keep the left-most ``length`` bits."""
        if length > self._length:
            raise ValueError("cannot truncate to a longer length")
        return BitString.from_bits(self.bits[:length])

    def __xor__(self, other: "BitString") -> "BitString":
        if len(other) != self._length:
            raise ValueError(f"length mismatch: {self._length} vs {len(other)}")
        return BitString(np.bitwise_xor(self._packed, other._packed), self._length)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._length == other._length and bool(np.array_equal(self._packed, other._packed))

    def __hash__(self) -> int:
        return hash((self._length, self._packed.tobytes()))

    def to_hex(self) -> str:
        """Lowercase hex of the packed bytes (last byte zero-padded on the right)."""
        return self._packed.tobytes().hex()

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def __repr__(self) -> str:
        if self._length <= 64:
            return f"BitString('{self}')"
        return f"BitString(<{self._length} bits>)"


class IndexSubset:
    """Strictly increasing 0-based positions into a parent string."""

    __slots__ = ("indices", "parent_length")

    def __init__(self, indices: Sequence[int] | np.ndarray, parent_length: int):
        idx = np.asarray(indices, dtype=np.int64).ravel()
        if idx.size and (idx[0] < 0 or idx[-1] >= parent_length or np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be strictly increasing and inside the parent")
        idx.setflags(write=False)
        self.indices = idx
        self.parent_length = int(parent_length)

    @classmethod
    def from_one_based(cls, positions: Iterable[int], parent_length: int) -> "IndexSubset":
        return cls(sorted(int(i) - 1 for i in positions), parent_length)

    @classmethod
    def full(cls, parent_length: int) -> "IndexSubset":
        return cls(np.arange(parent_length), parent_length)

    def one_based(self) -> list[int]:
        return [int(i) + 1 for i in self.indices]

    def complement(self) -> "IndexSubset":
        mask = np.ones(self.parent_length, dtype=bool)
        mask[self.indices] = False
        return IndexSubset(np.flatnonzero(mask), self.parent_length)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __repr__(self) -> str:
        return f"IndexSubset({self.one_based()} of {self.parent_length}, 1-based)"


def relative_weight(q: BitString) -> float:
    """Fraction of ones in ``q``."""
    if len(q) == 0:
        raise ValueError("relative weight of an empty string is undefined")
    return q.weight() / len(q)


def xor_fold(segments: Sequence[BitString], t: IndexSubset | None = None) -> BitString:
    """XOR all ``segments`` together, then restrict to ``t`` (all positions if None)."""
    if not segments:
        raise ValueError("xor_fold needs at least one segment")
    n = len(segments[0])
    acc = np.zeros_like(segments[0].packed)
    for s in segments:
        if len(s) != n:
            raise ValueError(f"length mismatch: {len(s)} vs {n}")
        acc = np.bitwise_xor(acc, s.packed)
    folded = BitString(acc, n)
    return folded if t is None else folded.take(t)
