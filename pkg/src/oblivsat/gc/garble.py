"""Free-XOR, point-and-permute garbling over 128-bit wire labels.

The garbler holds a session-global delta with its low bit set; a wire's two
labels are (W, W xor delta) and a label's low bit is its select bit.  XOR
gates are label XORs with no table.  AND gates carry a four-row table indexed
by the operand select bits; rows are one-time-padded with a hash of the two
operand labels and the gate id.

The hash is fixed-key AES in a Davies-Meyer arrangement over a linear
combination of the operand labels (GF(2^128) doublings) and the gate-id
tweak.  Gate ids increase monotonically across the whole session so pads
never repeat even when labels are carried between circuits.

All label math is vectorised: one AES pass per gate block.
"""

from __future__ import annotations

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from ..errors import ProtocolError
from .builder import CONST_FALSE, CONST_TRUE, Circuit

LABEL_BYTES = 16

_FIXED_AES = Cipher(
    algorithms.AES(b"oblivsat.gc.hash"), modes.ECB()
).encryptor()


def _aes_fixed(x: np.ndarray) -> np.ndarray:
    out = _FIXED_AES.update(np.ascontiguousarray(x).tobytes())
    return np.frombuffer(out, dtype=np.uint8).reshape(x.shape)


def gf_double(a: np.ndarray) -> np.ndarray:
    """Doubling in GF(2^128), labels as little-endian 128-bit integers."""
    out = (a << 1).astype(np.uint8)
    out[:, 1:] |= a[:, :-1] >> 7
    out[:, 0] ^= (a[:, -1] >> 7) * 0x87
    return out


def hash_labels(a: np.ndarray, b: np.ndarray, gids: np.ndarray) -> np.ndarray:
    """H(A, B, gid) on (N, 16) label batches."""
    x = gf_double(a) ^ gf_double(gf_double(b))
    x = x.copy()
    x[:, :8] ^= gids.astype("<u8").view(np.uint8).reshape(-1, 8)
    return _aes_fixed(x) ^ x


def sample_labels(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 256, (n, LABEL_BYTES), dtype=np.uint8)


def sample_delta(rng: np.random.Generator) -> np.ndarray:
    delta = rng.integers(0, 256, LABEL_BYTES, dtype=np.uint8)
    delta[0] |= 1  # distinct select bits on every wire
    return delta


def select_bits(labels: np.ndarray) -> np.ndarray:
    return labels[:, 0] & 1


def garble(
    circuit: Circuit,
    label0: np.ndarray,
    delta: np.ndarray,
    rng: np.random.Generator,
    gid_start: int,
) -> bytes:
    """Fill gate output rows of ``label0`` (false labels, shape (n_wires, 16))
    and return the concatenated AND tables.  Input and constant rows must be
    populated by the caller."""
    tables = []
    gid = gid_start
    d = delta[None, :]
    for blk in circuit.blocks:
        A0 = label0[blk.a]
        B0 = label0[blk.b]
        if blk.op == "xor":
            label0[blk.out] = A0 ^ B0
            continue
        k = blk.out.shape[0]
        O0 = sample_labels(rng, k)
        label0[blk.out] = O0
        gids = np.arange(gid, gid + k, dtype=np.uint64)
        gid += k
        pa = A0[:, 0] & 1
        pb = B0[:, 0] & 1
        table = np.empty((k, 4, LABEL_BYTES), dtype=np.uint8)
        for sa in (0, 1):
            va = sa ^ pa
            Asel = A0 ^ va[:, None] * d
            for sb in (0, 1):
                vb = sb ^ pb
                Bsel = B0 ^ vb[:, None] * d
                vout = va & vb
                table[:, sa * 2 + sb] = (
                    hash_labels(Asel, Bsel, gids) ^ O0 ^ vout[:, None] * d
                )
        tables.append(table.tobytes())
    return b"".join(tables)


def evaluate(
    circuit: Circuit,
    active: np.ndarray,
    tables: bytes,
    gid_start: int,
) -> None:
    """Walk the gate blocks, filling active labels in place.  Blocks are the
    evaluation levels: gates within one block are independent, so each block
    is one vectorised step with a single AES pass."""
    if len(tables) != circuit.and_count * 4 * LABEL_BYTES:
        raise ProtocolError("garbled table size mismatch")
    tview = np.frombuffer(tables, dtype=np.uint8).reshape(-1, 4, LABEL_BYTES)
    tpos = 0
    gid = gid_start
    for blk in circuit.blocks:
        A = active[blk.a]
        B = active[blk.b]
        if blk.op == "xor":
            active[blk.out] = A ^ B
            continue
        k = blk.out.shape[0]
        gids = np.arange(gid, gid + k, dtype=np.uint64)
        gid += k
        rows = tview[tpos : tpos + k][np.arange(k), (A[:, 0] & 1) * 2 + (B[:, 0] & 1)]
        tpos += k
        active[blk.out] = hash_labels(A, B, gids) ^ rows


def recombine_bits(a_active: np.ndarray, b_label0: np.ndarray) -> np.ndarray:
    """Test-mode oracle: join the two parties' views of shared wires into
    plaintext bits (active equals the false label iff the value is 0)."""
    return (a_active != b_label0).any(axis=1).astype(np.uint8)


def init_label0(circuit: Circuit, rng: np.random.Generator) -> np.ndarray:
    label0 = np.zeros((circuit.n_wires, LABEL_BYTES), dtype=np.uint8)
    label0[CONST_FALSE] = sample_labels(rng, 1)[0]
    label0[CONST_TRUE] = sample_labels(rng, 1)[0]
    return label0
