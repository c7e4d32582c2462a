"""Randomness sampling: keys, matrices, permutations.

Release mode draws from the OS; deterministic mode derives a per-party,
per-purpose stream from (seed, role) so protocol runs replay exactly.
Deterministic mode is a test facility and must not be used in production
sessions.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass

import numpy as np


def party_rng(seed: int, role: str) -> np.random.Generator:
    """Seeded, per-party generator; the two parties' streams are independent."""
    digest = hashlib.sha256(f"oblivsat.rng.{seed}.{role}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))


def system_rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(secrets.randbits(128)))


KEY_BYTES = 16


@dataclass(frozen=True)
class PrfKey:
    material: bytes
    prf_id: int

    def __post_init__(self):
        if len(self.material) != KEY_BYTES:
            raise ValueError("PRF keys are 128 bits")


def sample_key(rng: np.random.Generator, prf_id: int) -> PrfKey:
    return PrfKey(bytes(rng.integers(0, 256, KEY_BYTES, dtype=np.uint8)), prf_id)


def sample_matrix(rng: np.random.Generator, rows: int, blocks: int) -> np.ndarray:
    """Fresh uniform matrix of 128-bit blocks, shape (rows, blocks*16) uint8."""
    return rng.integers(0, 256, (rows, blocks * KEY_BYTES), dtype=np.uint8)


@dataclass(frozen=True)
class Permutation:
    """Bijection on n rows stored as a destination map: row i moves to dest[i]."""

    dest: np.ndarray  # (n,) int64

    def __post_init__(self):
        d = np.asarray(self.dest, dtype=np.int64)
        object.__setattr__(self, "dest", d)
        if not np.array_equal(np.sort(d), np.arange(d.shape[0])):
            raise ValueError("not a bijection on [0, n)")

    @property
    def n(self) -> int:
        return self.dest.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        out[self.dest] = v
        return out

    def compose_after(self, first: "Permutation") -> "Permutation":
        """self ∘ first: apply ``first`` then ``self``."""
        return Permutation(self.dest[first.dest])

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(np.arange(n))

    @staticmethod
    def from_one_line(image: list[int]) -> "Permutation":
        """1-based one-line notation: image[i] is where row i+1 goes."""
        return Permutation(np.asarray(image, dtype=np.int64) - 1)


def sample_permutation(rng: np.random.Generator, n: int) -> Permutation:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Permutation(rng.permutation(n))
