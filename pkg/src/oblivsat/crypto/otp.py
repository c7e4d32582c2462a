"""One-time-pad encryption over block matrices, and the row payload packing.

Enc{V}{k}{R} = V xor PRF(k, R), block-wise.  Cells are 2 bits, so packing a
row into 128-bit blocks fits 64 cells per block; the un-packed layout (one
cell per block) exists to measure what that optimisation buys.

The pad audit is an optional per-session hook: encryption registers each
(key, R-block) pair and refuses a repeat; decryption consumes a registered
pair, because removing a pad reuses the same blocks by construction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Dict, Set, Tuple

import numpy as np

from ..errors import EncodingError, MaskReuseError
from .prf import prf_apply
from .rng import KEY_BYTES, PrfKey

BLOCK_BITS = 128


class PadAudit:
    """Tracks outstanding (key, randomness-block) pads within one session."""

    def __init__(self):
        self._live: Set[Tuple[bytes, bytes]] = set()

    def register(self, key: PrfKey, R: np.ndarray) -> None:
        kid = hashlib.sha256(bytes([key.prf_id]) + key.material).digest()[:8]
        flat = np.ascontiguousarray(R, dtype=np.uint8).reshape(-1, KEY_BYTES)
        for blk in flat:
            pair = (kid, blk.tobytes())
            if pair in self._live:
                raise MaskReuseError("one-time pad (key, R) block reused")
            self._live.add(pair)

    def consume(self, key: PrfKey, R: np.ndarray) -> None:
        kid = hashlib.sha256(bytes([key.prf_id]) + key.material).digest()[:8]
        flat = np.ascontiguousarray(R, dtype=np.uint8).reshape(-1, KEY_BYTES)
        for blk in flat:
            self._live.discard((kid, blk.tobytes()))


def otp_encrypt(
    V: np.ndarray, key: PrfKey, R: np.ndarray, audit: PadAudit | None = None
) -> np.ndarray:
    """V xor PRF(k, R); self-inverse when called again with the same (k, R)."""
    V = np.ascontiguousarray(V, dtype=np.uint8)
    R = np.ascontiguousarray(R, dtype=np.uint8)
    if V.shape != R.shape:
        raise EncodingError(f"shape mismatch {V.shape} vs {R.shape}")
    if audit is not None:
        audit.register(key, R)
    return V ^ prf_apply(key, R)


def otp_decrypt(
    V: np.ndarray, key: PrfKey, R: np.ndarray, audit: PadAudit | None = None
) -> np.ndarray:
    V = np.ascontiguousarray(V, dtype=np.uint8)
    R = np.ascontiguousarray(R, dtype=np.uint8)
    if V.shape != R.shape:
        raise EncodingError(f"shape mismatch {V.shape} vs {R.shape}")
    if audit is not None:
        audit.consume(key, R)
    return V ^ prf_apply(key, R)


# ---- row payload layout --------------------------------------------------------

PRIOR_BITS = 16


def blocks_for_bits(nbits: int) -> int:
    return max(1, -(-nbits // BLOCK_BITS)) if nbits else 0


@dataclass(frozen=True)
class PayloadLayout:
    """Where cell and strategy bits live inside each party's row segment.

    The consumer segment holds its m_a clause cells; the provider segment
    holds its m_b cells followed by the 16-bit priority and 1-bit default
    assignment (riding the provider's block padding keeps the packed width
    minimal).  Un-packed mode spends one block per cell and per strategy
    field, matching element-wise protocol operation.
    """

    m_a: int
    m_b: int
    packed: bool = True

    @property
    def a_bits(self) -> int:
        return 2 * self.m_a if self.packed else 0

    @property
    def a_blocks(self) -> int:
        if self.packed:
            return blocks_for_bits(2 * self.m_a)
        return self.m_a

    @property
    def b_blocks(self) -> int:
        if self.packed:
            return blocks_for_bits(2 * self.m_b + PRIOR_BITS + 1)
        return self.m_b + 2

    @property
    def total_blocks(self) -> int:
        return self.a_blocks + self.b_blocks

    def row_bytes(self, side: str) -> int:
        return (self.a_blocks if side == "A" else self.b_blocks) * KEY_BYTES


def _pack_cells(O: np.ndarray, P: np.ndarray, packed: bool) -> np.ndarray:
    """Interleave (O, P) cell bits row-wise and pad to whole blocks."""
    n, m = O.shape
    if packed:
        bits = np.zeros((n, 2 * m), dtype=np.uint8)
        bits[:, 0::2] = O
        bits[:, 1::2] = P
        nbytes = blocks_for_bits(2 * m) * KEY_BYTES
        out = np.zeros((n, nbytes), dtype=np.uint8)
        packed_bytes = np.packbits(bits, axis=1, bitorder="little")
        out[:, : packed_bytes.shape[1]] = packed_bytes
        return out
    out = np.zeros((n, m, KEY_BYTES), dtype=np.uint8)
    out[:, :, 0] = O | (P << 1)
    return out.reshape(n, m * KEY_BYTES)


def pack_consumer_segment(O: np.ndarray, P: np.ndarray, layout: PayloadLayout) -> np.ndarray:
    if O.shape[1] != layout.m_a:
        raise EncodingError("consumer clause count does not match layout")
    return _pack_cells(O, P, layout.packed)


def pack_provider_segment(
    O: np.ndarray,
    P: np.ndarray,
    prior: np.ndarray,
    assign: np.ndarray,
    layout: PayloadLayout,
) -> np.ndarray:
    if O.shape[1] != layout.m_b:
        raise EncodingError("provider clause count does not match layout")
    n = O.shape[0]
    prior = np.asarray(prior, dtype=np.uint64)
    assign = np.asarray(assign, dtype=np.uint8)
    if prior.shape != (n,) or assign.shape != (n,):
        raise EncodingError("strategy vectors must have one entry per row")
    if prior.size and prior.max() >= (1 << PRIOR_BITS):
        raise EncodingError(f"priorities must fit in {PRIOR_BITS} bits")
    prior_bits = ((prior[:, None] >> np.arange(PRIOR_BITS, dtype=np.uint64)) & 1).astype(
        np.uint8
    )
    if layout.packed:
        bits = np.zeros((n, 2 * layout.m_b + PRIOR_BITS + 1), dtype=np.uint8)
        bits[:, 0 : 2 * layout.m_b : 2] = O
        bits[:, 1 : 2 * layout.m_b : 2] = P
        bits[:, 2 * layout.m_b : 2 * layout.m_b + PRIOR_BITS] = prior_bits
        bits[:, 2 * layout.m_b + PRIOR_BITS] = assign & 1
        nbytes = layout.b_blocks * KEY_BYTES
        out = np.zeros((n, nbytes), dtype=np.uint8)
        pb = np.packbits(bits, axis=1, bitorder="little")
        out[:, : pb.shape[1]] = pb
        return out
    cells = _pack_cells(O, P, packed=False)
    prior_block = np.zeros((n, KEY_BYTES), dtype=np.uint8)
    prior_block[:, :2] = np.packbits(prior_bits, axis=1, bitorder="little")
    assign_block = np.zeros((n, KEY_BYTES), dtype=np.uint8)
    assign_block[:, 0] = assign & 1
    return np.hstack([cells, prior_block, assign_block])


@dataclass
class SplitShares:
    """Bit-level view of one party's share of the shuffled payload."""

    O: np.ndarray  # (n, m) uint8
    P: np.ndarray  # (n, m) uint8
    prior: np.ndarray  # (n, PRIOR_BITS) uint8, LSB first
    assign: np.ndarray  # (n,) uint8


def split_payload(rows: np.ndarray, layout: PayloadLayout) -> SplitShares:
    """Slice a share of the full payload back into cell and strategy bits.

    XOR sharing commutes with bit slicing, so each party applies this to its
    own share independently.
    """
    n = rows.shape[0]
    a_bytes = layout.a_blocks * KEY_BYTES
    a_seg = rows[:, :a_bytes]
    b_seg = rows[:, a_bytes:]
    if layout.packed:
        a_bits = np.unpackbits(a_seg, axis=1, bitorder="little")
        b_bits = np.unpackbits(b_seg, axis=1, bitorder="little")
        Oa = a_bits[:, 0 : 2 * layout.m_a : 2]
        Pa = a_bits[:, 1 : 2 * layout.m_a : 2]
        Ob = b_bits[:, 0 : 2 * layout.m_b : 2]
        Pb = b_bits[:, 1 : 2 * layout.m_b : 2]
        pr = b_bits[:, 2 * layout.m_b : 2 * layout.m_b + PRIOR_BITS]
        asg = b_bits[:, 2 * layout.m_b + PRIOR_BITS]
    else:
        a_cells = a_seg.reshape(n, layout.m_a, KEY_BYTES)[:, :, 0]
        b_blocks = b_seg.reshape(n, layout.m_b + 2, KEY_BYTES)
        b_cells = b_blocks[:, : layout.m_b, 0]
        Oa, Pa = a_cells & 1, (a_cells >> 1) & 1
        Ob, Pb = b_cells & 1, (b_cells >> 1) & 1
        pr = np.unpackbits(b_blocks[:, layout.m_b, :2], axis=1, bitorder="little")
        asg = b_blocks[:, layout.m_b + 1, 0] & 1
    return SplitShares(
        O=np.hstack([Oa, Ob]).astype(np.uint8),
        P=np.hstack([Pa, Pb]).astype(np.uint8),
        prior=pr.astype(np.uint8),
        assign=asg.astype(np.uint8),
    )
