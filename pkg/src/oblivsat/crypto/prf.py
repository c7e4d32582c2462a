"""Pseudorandom function over 128-bit blocks, host-side and in-circuit.

Two registered instantiations share one contract: a keyed permutation of one
16-byte block, applied element-wise over block matrices.

  id 1, "aes128"    AES-128 in direct (ECB single-block) evaluation.  The
                    production choice; its circuit is large (~77k AND gates
                    per block) so it is impractical for quick tests.
  id 2, "tc16"      A 16-round Feistel test cipher built from rotate/AND/XOR
                    with a linear key schedule.  Cheap in circuits (1024 AND
                    gates per block).  Not a vetted cipher; test use only.

Host and circuit forms are checked against each other in the test suite; the
protocol algebra needs them to be the same function.
"""

from __future__ import annotations

import hashlib
from typing import Dict

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from ..errors import EncodingError
from ..gc.builder import Bus, CircuitBuilder
from .rng import KEY_BYTES, PrfKey

PRF_AES128 = 1
PRF_TC16 = 2
PRF_NAMES: Dict[int, str] = {PRF_AES128: "aes128", PRF_TC16: "tc16"}

_TC_ROUNDS = 16


def _tc_round_constants(rounds: int) -> np.ndarray:
    rc = [
        int.from_bytes(hashlib.sha256(b"oblivsat.tc.rc.%d" % i).digest()[:8], "little")
        for i in range(rounds)
    ]
    return np.array(rc, dtype=np.uint64)


_TC_RC = _tc_round_constants(_TC_ROUNDS)


def _rotl64(x: np.ndarray, r: int) -> np.ndarray:
    r %= 64
    if r == 0:
        return x
    return (x << np.uint64(r)) | (x >> np.uint64(64 - r))


def _tc_round_keys(key: bytes) -> np.ndarray:
    kl, kh = np.frombuffer(key, dtype="<u8")
    rks = np.empty(_TC_ROUNDS, dtype=np.uint64)
    for i in range(_TC_ROUNDS):
        rks[i] = _rotl64(np.uint64(kl), (5 * i + 1) % 64) ^ _rotl64(
            np.uint64(kh), (9 * i + 3) % 64
        ) ^ _TC_RC[i]
    return rks


def _tc16_host(key: bytes, blocks: np.ndarray) -> np.ndarray:
    """blocks: (N, 16) uint8 -> (N, 16) uint8."""
    words = np.ascontiguousarray(blocks).view("<u8").reshape(-1, 2)
    L = words[:, 0].copy()
    R = words[:, 1].copy()
    rks = _tc_round_keys(key)
    for i in range(_TC_ROUNDS):
        f = (_rotl64(L, 1) & _rotl64(L, 8)) ^ _rotl64(L, 2)
        L, R = R ^ f ^ rks[i], L
    kl, kh = np.frombuffer(key, dtype="<u8")
    out = np.empty_like(words)
    out[:, 0] = L ^ kh
    out[:, 1] = R ^ kl
    return out.view(np.uint8).reshape(-1, 16)


def _aes_host(key: bytes, blocks: np.ndarray) -> np.ndarray:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    flat = np.ascontiguousarray(blocks, dtype=np.uint8).reshape(-1, 16)
    out = enc.update(flat.tobytes())
    return np.frombuffer(out, dtype=np.uint8).reshape(flat.shape).copy()


def prf_apply(key: PrfKey, blocks: np.ndarray) -> np.ndarray:
    """Element-wise PRF over a matrix of 128-bit blocks.

    Accepts any uint8 array whose byte count is a multiple of 16 and returns
    the same shape; PRF(k, M)_ij = PRF(k, M_ij) by construction.
    """
    arr = np.ascontiguousarray(blocks, dtype=np.uint8)
    if arr.size % KEY_BYTES:
        raise EncodingError("input is not a whole number of 128-bit blocks")
    shape = arr.shape
    flat = arr.reshape(-1, KEY_BYTES)
    if key.prf_id == PRF_AES128:
        out = _aes_host(key.material, flat)
    elif key.prf_id == PRF_TC16:
        out = _tc16_host(key.material, flat)
    else:
        raise EncodingError(f"unknown prf id {key.prf_id}")
    return out.reshape(shape)


# ---- circuit forms ------------------------------------------------------------


def _bus_rotl64(bus: Bus, r: int) -> Bus:
    """Rotation is wiring only: bus is (..., 64) LSB-first."""
    r %= 64
    return np.concatenate([bus[..., 64 - r :], bus[..., : 64 - r]], axis=-1) if r else bus


def _const_mask_xor(cb: CircuitBuilder, bus: Bus, value: int, width: int) -> Bus:
    mask = cb.const_bus(value, width)
    return cb.xor(bus, np.broadcast_to(mask, bus.shape))


def emit_tc16(cb: CircuitBuilder, key_bus: Bus, data_bus: Bus) -> Bus:
    """Test-cipher lanes: key_bus (128,), data_bus (N, 128), both LSB-first to
    match the little-endian host view.  Returns (N, 128)."""
    kl, kh = key_bus[:64], key_bus[64:]
    L = data_bus[:, :64]
    R = data_bus[:, 64:]
    for i in range(_TC_ROUNDS):
        rk = cb.xor(
            _bus_rotl64(kl, (5 * i + 1) % 64), _bus_rotl64(kh, (9 * i + 3) % 64)
        )
        rk = _const_mask_xor(cb, rk, int(_TC_RC[i]), 64)
        f = cb.xor(
            cb.and_(_bus_rotl64(L, 1), _bus_rotl64(L, 8)), _bus_rotl64(L, 2)
        )
        newL = cb.xor(cb.xor(R, f), np.broadcast_to(rk, f.shape))
        L, R = newL, L
    L = cb.xor(L, np.broadcast_to(kh, L.shape))
    R = cb.xor(R, np.broadcast_to(kl, R.shape))
    return np.concatenate([L, R], axis=-1)


# AES tower-field free circuit: squaring in GF(2^8) is F2-linear, and x^254
# goes by square-and-multiply, so only GF multiplications cost AND gates.

_AES_POLY = 0x11B


def _gf_mul_int(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= _AES_POLY
        b >>= 1
    return r


def _gf_square_matrix() -> np.ndarray:
    cols = [_gf_mul_int(1 << k, 1 << k) for k in range(8)]
    return np.array(
        [[(cols[k] >> j) & 1 for k in range(8)] for j in range(8)], dtype=np.uint8
    )


_SQ_MATRIX = _gf_square_matrix()

# x^k mod poly for the 15-bit schoolbook product, as reduction rows
def _red_matrix() -> np.ndarray:
    xs = [1]
    for _ in range(14):
        v = xs[-1] << 1
        xs.append(v ^ _AES_POLY if v & 0x100 else v)
    return np.array(
        [[(xs[k] >> j) & 1 for k in range(15)] for j in range(8)], dtype=np.uint8
    )


_RED_MATRIX = _red_matrix()
# affine constant and matrix of the S-box output transform
_AFFINE_C = 0x63
_AFFINE_M = np.array(
    [[1 if ((k - j) % 8 in (0, 4, 5, 6, 7)) else 0 for k in range(8)] for j in range(8)],
    dtype=np.uint8,
)


def _linear_map(cb: CircuitBuilder, mat: np.ndarray, x: Bus) -> Bus:
    """y_j = XOR over k of mat[j,k] * x_k, lanes in leading axes; free gates."""
    outs = []
    for j in range(mat.shape[0]):
        ks = np.nonzero(mat[j])[0]
        if ks.size == 0:
            outs.append(np.full(x.shape[:-1] + (1,), 0, dtype=np.int64))
        else:
            outs.append(cb.xor_reduce(x[..., ks], axis=-1)[..., None])
    return np.concatenate(outs, axis=-1)


def _gf_mul(cb: CircuitBuilder, a: Bus, b: Bus) -> Bus:
    """GF(2^8) multiply, lanes (..., 8): 64 ANDs + linear reduction."""
    prods = cb.and_(a[..., :, None], b[..., None, :])  # (..., 8, 8)
    coeffs = []
    for k in range(15):
        idx = [(i, k - i) for i in range(8) if 0 <= k - i < 8]
        terms = np.stack([prods[..., i, j] for i, j in idx], axis=-1)
        coeffs.append(cb.xor_reduce(terms, axis=-1)[..., None])
    poly = np.concatenate(coeffs, axis=-1)  # (..., 15)
    return _linear_map(cb, _RED_MATRIX, poly)


def _sbox(cb: CircuitBuilder, x: Bus) -> Bus:
    """AES S-box on byte lanes (..., 8) LSB-first."""
    # inverse = x^254 via square-and-multiply over bits of 254 (MSB first)
    r = x
    for bit in (1, 1, 1, 1, 1, 1, 0):
        r = _linear_map(cb, _SQ_MATRIX, r)
        if bit:
            r = _gf_mul(cb, r, x)
    y = _linear_map(cb, _AFFINE_M, r)
    return _const_mask_xor(cb, y, _AFFINE_C, 8)


_RCON = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]


def _xtime_bus(cb: CircuitBuilder, x: Bus) -> Bus:
    """Multiply byte lanes by 2 in GF(2^8); linear."""
    shifted = np.concatenate(
        [np.full(x.shape[:-1] + (1,), 0, dtype=np.int64), x[..., :7]], axis=-1
    )
    msb = x[..., 7:8]
    red = cb.and_(msb, np.broadcast_to(CircuitBuilder.const_bus(0x1B, 8), x.shape))
    return cb.xor(shifted, red)


def emit_aes128(cb: CircuitBuilder, key_bus: Bus, data_bus: Bus) -> Bus:
    """AES-128 lanes: key (128,), data (N, 128); bit order is byte-serial
    LSB-first (bit 8*i+j is bit j of byte i), bytes in standard AES order."""
    kbytes = key_bus.reshape(16, 8)
    round_keys = [kbytes]
    for rnd in range(10):
        prev = round_keys[-1]
        tail = prev[12:16]
        rot = np.concatenate([tail[1:], tail[:1]], axis=0)
        sub = _sbox(cb, rot)
        w0 = cb.xor(prev[0:4], sub)
        w0 = np.concatenate(
            [_const_mask_xor(cb, w0[0:1], _RCON[rnd], 8), w0[1:]], axis=0
        )
        w1 = cb.xor(prev[4:8], w0)
        w2 = cb.xor(prev[8:12], w1)
        w3 = cb.xor(prev[12:16], w2)
        round_keys.append(np.concatenate([w0, w1, w2, w3], axis=0))

    state = data_bus.reshape(-1, 16, 8)
    state = cb.xor(state, np.broadcast_to(round_keys[0], state.shape))
    for rnd in range(1, 11):
        state = _sbox(cb, state)
        # ShiftRows on byte index i = 4*col + row
        idx = [(4 * ((c + r) % 4) + r) for c in range(4) for r in range(4)]
        state = state[:, idx, :]
        if rnd < 10:
            cols = state.reshape(-1, 4, 4, 8)
            t = cb.xor_reduce(cols, axis=2)  # column xor, (N,4,8)
            rot1 = np.roll(np.arange(4), -1)
            mixed = cb.xor(
                cols,
                cb.xor(
                    _xtime_bus(cb, cb.xor(cols, cols[:, :, rot1])),
                    np.broadcast_to(t[:, :, None, :], cols.shape),
                ),
            )
            state = mixed.reshape(-1, 16, 8)
        state = cb.xor(state, np.broadcast_to(round_keys[rnd], state.shape))
    return state.reshape(-1, 128)


def emit_prf(cb: CircuitBuilder, prf_id: int, key_bus: Bus, data_bus: Bus) -> Bus:
    if prf_id == PRF_TC16:
        return emit_tc16(cb, key_bus, data_bus)
    if prf_id == PRF_AES128:
        return emit_aes128(cb, key_bus, data_bus)
    raise EncodingError(f"unknown prf id {prf_id}")


def blocks_to_bits(blocks: np.ndarray) -> np.ndarray:
    """(N, 16) uint8 blocks -> (N, 128) bits, byte-serial LSB-first."""
    return np.unpackbits(
        np.ascontiguousarray(blocks, dtype=np.uint8), axis=-1, bitorder="little"
    )


def bits_to_blocks(bits: np.ndarray) -> np.ndarray:
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=-1, bitorder="little")
