"""Semi-honest 1-out-of-2 oblivious transfer, batched.

Discrete-log construction in the EGL style: the sender publishes a group
element C of unknown discrete log to the receiver.  Per transfer the
receiver sends PK0, choosing either PK0 = g^k (choice 0) or PK0 = C * g^-k
(choice 1); PK1 is defined as C / PK0, so the receiver can know the secret
exponent of exactly one key while PK0 alone is uniform either way.  The
sender hashed-ElGamal-encrypts each message under its key, sharing one
ephemeral exponent per batch.

Messages are fixed 16-byte strings (wire labels).
"""

from __future__ import annotations

import hashlib
from typing import List, Sequence, Tuple

import numpy as np
from gmpy2 import invert, mpz, powmod

from ..errors import ProtocolError
from .groups import GROUPS, OtGroup

MSG_BYTES = 16


def _scalar(rng: np.random.Generator, q: mpz) -> mpz:
    b = rng.integers(0, 256, 40, dtype=np.uint8).tobytes()
    return mpz(int.from_bytes(b, "big") % int(q - 1) + 1)


def _kdf(group: OtGroup, k: mpz, index: int, bit: int) -> bytes:
    h = hashlib.sha256()
    h.update(group.encode(k))
    h.update(index.to_bytes(8, "little"))
    h.update(bytes([bit]))
    return h.digest()[:MSG_BYTES]


class OtSender:
    """Holds the batch element C; one instance per session."""

    def __init__(self, group: OtGroup, rng: np.random.Generator):
        self.group = group
        self._rng = rng
        self._c_exp = _scalar(rng, group.q)
        self.c_elem = powmod(group.g, self._c_exp, group.p)

    def setup_bytes(self) -> bytes:
        return self.group.encode(self.c_elem)

    def respond(self, request: bytes, pairs: np.ndarray) -> bytes:
        """Encrypt message pairs (N, 2, 16) against a batch of receiver keys."""
        g = self.group
        n = pairs.shape[0]
        if len(request) != n * g.elem_bytes:
            raise ProtocolError("OT request length does not match batch size")
        r = _scalar(self._rng, g.q)
        U = powmod(g.g, r, g.p)
        Cr = powmod(self.c_elem, r, g.p)
        out = [g.encode(U)]
        eb = g.elem_bytes
        for i in range(n):
            pk0 = g.decode(request[i * eb : (i + 1) * eb])
            if not 1 <= pk0 < g.p:
                raise ProtocolError("OT public key out of range")
            k0 = powmod(pk0, r, g.p)
            k1 = Cr * invert(k0, g.p) % g.p
            m0 = bytes(pairs[i, 0])
            m1 = bytes(pairs[i, 1])
            e0 = bytes(a ^ b for a, b in zip(m0, _kdf(g, k0, i, 0)))
            e1 = bytes(a ^ b for a, b in zip(m1, _kdf(g, k1, i, 1)))
            out.append(e0)
            out.append(e1)
        return b"".join(out)


class OtReceiver:
    def __init__(self, group: OtGroup, rng: np.random.Generator):
        self.group = group
        self._rng = rng
        self.c_elem: mpz | None = None
        self._pending: List[Tuple[int, mpz]] | None = None

    def load_setup(self, payload: bytes) -> None:
        self.c_elem = self.group.decode(payload)
        if not 1 <= self.c_elem < self.group.p:
            raise ProtocolError("OT setup element out of range")

    def request(self, choices: Sequence[int]) -> bytes:
        if self.c_elem is None:
            raise ProtocolError("OT setup not loaded")
        if self._pending is not None:
            raise ProtocolError("previous OT batch still open")
        g = self.group
        pks = []
        pending = []
        for sigma in np.asarray(choices, dtype=np.uint8):
            k = _scalar(self._rng, g.q)
            gk = powmod(g.g, k, g.p)
            pk0 = gk if sigma == 0 else self.c_elem * invert(gk, g.p) % g.p
            pks.append(g.encode(pk0))
            pending.append((int(sigma), k))
        self._pending = pending
        return b"".join(pks)

    def receive(self, payload: bytes) -> np.ndarray:
        if self._pending is None:
            raise ProtocolError("no OT batch open")
        g = self.group
        n = len(self._pending)
        eb = g.elem_bytes
        if len(payload) != eb + n * 2 * MSG_BYTES:
            raise ProtocolError("OT response length mismatch")
        U = g.decode(payload[:eb])
        body = payload[eb:]
        out = np.empty((n, MSG_BYTES), dtype=np.uint8)
        for i, (sigma, k) in enumerate(self._pending):
            kk = powmod(U, k, g.p)
            e = body[(2 * i + sigma) * MSG_BYTES : (2 * i + sigma + 1) * MSG_BYTES]
            pad = _kdf(g, kk, i, sigma)
            out[i] = np.frombuffer(
                bytes(a ^ b for a, b in zip(e, pad)), dtype=np.uint8
            )
        self._pending = None
        return out


def ot_group(gid: int) -> OtGroup:
    if gid not in GROUPS:
        raise ProtocolError(f"unknown OT group id {gid}")
    return GROUPS[gid]
