"""Oblivious row shuffle: encrypted preparation and two-sided permutation.

Preparation leaves the consumer holding Enc{[F^A F^B]}{k_B}{R^B} together
with R^B, and the provider holding only k_B: neither party ever sees the
other's formula in the clear, yet the consumer holds a ciphertext of the
joint matrix under the provider's key.

The shuffle then has each side contribute a private row permutation.  The
consumer masks and permutes its ciphertext locally; in-circuit PRF
evaluations cancel the old pads and inject fresh ones without releasing
anything; the provider re-permutes the released-to-it masked matrix.  The
result is an XOR sharing of pi_B(pi_A(V)) where each party knows only its
own permutation factor.

Row payloads travel as 128-bit blocks; the provider's segment carries the
branching strategy (priority and default assignment) on its padding bits so
one run permutes formula and strategy under the same composed permutation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .crypto.otp import (
    PadAudit,
    PayloadLayout,
    SplitShares,
    otp_decrypt,
    otp_encrypt,
    pack_consumer_segment,
    pack_provider_segment,
    split_payload,
)
from .crypto.prf import blocks_to_bits, bits_to_blocks, emit_prf, prf_apply
from .crypto.rng import KEY_BYTES, Permutation, PrfKey, sample_key, sample_matrix, sample_permutation
from .errors import ProtocolError
from .gc.builder import CircuitBuilder, TARGET_B, TARGET_SHARED
from .gc.engine import GcSession
from .transport import (
    PREP_PHI,
    PREP_PSI,
    SHUF_OUT,
    SHUF_SIGMA,
    FrameChannel,
    SessionParams,
)


@dataclass
class PartyContext:
    ch: FrameChannel
    params: SessionParams
    rng: np.random.Generator
    gc: GcSession
    audit: PadAudit = field(default_factory=PadAudit)

    @property
    def layout(self) -> PayloadLayout:
        return PayloadLayout(self.params.m_a, self.params.m_b, self.params.block_packing)


@dataclass
class PrepareStateA:
    """Consumer's post-preparation state: the joint randomness R^B and the
    joint ciphertext under the provider's key.  Never holds k_B."""

    R: np.ndarray  # (n, W*16)
    E: np.ndarray  # (n, W*16) = Enc{[F^A F^B]}{k_B}{R^B}
    debug: dict = field(default_factory=dict)


@dataclass
class PrepareStateB:
    """Provider's post-preparation state: just the key."""

    k_b: PrfKey
    debug: dict = field(default_factory=dict)


@dataclass
class ShuffledShare:
    blocks: np.ndarray  # (n, W*16) this party's XOR share of the permuted payload
    perm: Permutation  # this party's private permutation factor


def prepare_consumer(ctx: PartyContext, fa_segment: np.ndarray) -> PrepareStateA:
    n = ctx.params.n
    lay = ctx.layout
    if fa_segment.shape != (n, lay.a_blocks * KEY_BYTES):
        raise ProtocolError("consumer segment shape mismatch")
    k_a = sample_key(ctx.rng, ctx.params.prf_id)
    r_a = sample_matrix(ctx.rng, n, lay.a_blocks)
    psi = otp_encrypt(fa_segment, k_a, r_a, ctx.audit)
    ctx.ch.send(PREP_PSI, psi.tobytes())
    _, payload = ctx.ch.recv(PREP_PHI)
    a_bytes = lay.a_blocks * KEY_BYTES
    b_bytes = lay.b_blocks * KEY_BYTES
    want = n * (2 * a_bytes + 2 * b_bytes)
    if len(payload) != want:
        raise ProtocolError("PREP_PHI length mismatch")
    view = np.frombuffer(payload, dtype=np.uint8)
    off = 0

    def seg(nbytes: int) -> np.ndarray:
        nonlocal off
        out = view[off : off + n * nbytes].reshape(n, nbytes)
        off += n * nbytes
        return out

    phi_a = seg(a_bytes)
    phi_b = seg(b_bytes)
    r_b_a = seg(a_bytes).copy()
    r_b_b = seg(b_bytes).copy()
    e_a = otp_decrypt(phi_a, k_a, r_a, ctx.audit)  # = Enc{F^A}{k_B}{R^B_A}
    state = PrepareStateA(R=np.hstack([r_b_a, r_b_b]), E=np.hstack([e_a, phi_b]))
    if ctx.params.deterministic:
        state.debug.update(k_a=k_a, r_a=r_a, psi=psi, phi_a=phi_a.copy())
    return state


def prepare_provider(ctx: PartyContext, fb_segment: np.ndarray) -> PrepareStateB:
    n = ctx.params.n
    lay = ctx.layout
    if fb_segment.shape != (n, lay.b_blocks * KEY_BYTES):
        raise ProtocolError("provider segment shape mismatch")
    _, payload = ctx.ch.recv(PREP_PSI)
    a_bytes = lay.a_blocks * KEY_BYTES
    if len(payload) != n * a_bytes:
        raise ProtocolError("PREP_PSI length mismatch")
    psi = np.frombuffer(payload, dtype=np.uint8).reshape(n, a_bytes)
    k_b = sample_key(ctx.rng, ctx.params.prf_id)
    r_b_a = sample_matrix(ctx.rng, n, lay.a_blocks)
    r_b_b = sample_matrix(ctx.rng, n, lay.b_blocks)
    phi_a = otp_encrypt(psi, k_b, r_b_a, ctx.audit)
    phi_b = otp_encrypt(fb_segment, k_b, r_b_b, ctx.audit)
    ctx.ch.send(
        PREP_PHI,
        b"".join(x.tobytes() for x in (phi_a, phi_b, r_b_a, r_b_b)),
    )
    state = PrepareStateB(k_b=k_b)
    if ctx.params.deterministic:
        state.debug.update(r_b_a=r_b_a, r_b_b=r_b_b)
    return state


# ---- shuffle circuits (built identically by both parties) -----------------------


def build_prf_circuit(prf_id: int, n_blocks: int, key_owner: str):
    cb = CircuitBuilder()
    if key_owner == "B":
        key = cb.b_input("key", 128)
        data = cb.a_input("data", n_blocks * 128).reshape(n_blocks, 128)
    else:
        key = cb.a_input("key", 128)
        data = cb.b_input("data", n_blocks * 128).reshape(n_blocks, 128)
    out = emit_prf(cb, prf_id, key, data)
    cb.output("out", out, TARGET_SHARED)
    return cb.build()


def build_theta_circuit(nbits: int):
    cb = CircuitBuilder()
    d = cb.carry_input("delta", nbits)
    g = cb.carry_input("gamma", nbits)
    lam = cb.a_input("lam", nbits)
    sigma_omega = cb.b_input("sigma_omega", nbits)
    theta = cb.xor(cb.xor(d, g), cb.xor(lam, sigma_omega))
    cb.output("theta", theta, TARGET_B)
    return cb.build()


def shuffle_consumer(
    ctx: PartyContext,
    state: PrepareStateA,
    force_perm: Optional[Permutation] = None,
) -> ShuffledShare:
    n = ctx.params.n
    w = ctx.layout.total_blocks
    k_a2 = sample_key(ctx.rng, ctx.params.prf_id)
    r_a2 = sample_matrix(ctx.rng, n, w)
    pi_a = force_perm if force_perm is not None else sample_permutation(ctx.rng, n)

    sigma = pi_a.apply(otp_encrypt(state.E, k_a2, r_a2, ctx.audit))
    pi_a_r_a2 = pi_a.apply(r_a2)
    pi_a_r = pi_a.apply(state.R)
    ctx.ch.send(SHUF_SIGMA, sigma.tobytes() + pi_a_r_a2.tobytes())

    nb = n * w
    delta_ref = ctx.gc.execute(
        build_prf_circuit(ctx.params.prf_id, nb, key_owner="B"),
        {"data": blocks_to_bits(pi_a_r.reshape(nb, KEY_BYTES)).ravel()},
    ).shared["out"]
    gamma_ref = ctx.gc.execute(
        build_prf_circuit(ctx.params.prf_id, nb, key_owner="A"),
        {"key": blocks_to_bits(np.frombuffer(k_a2.material, dtype=np.uint8)[None, :]).ravel()},
    ).shared["out"]
    lam = prf_apply(k_a2, pi_a_r_a2)
    ctx.gc.execute(
        build_theta_circuit(nb * 128),
        {"lam": blocks_to_bits(lam.reshape(nb, KEY_BYTES)).ravel()},
        {"delta": delta_ref, "gamma": gamma_ref},
    )

    _, payload = ctx.ch.recv(SHUF_OUT)
    row_bytes = w * KEY_BYTES
    if len(payload) != 3 * n * row_bytes:
        raise ProtocolError("SHUF_OUT length mismatch")
    view = np.frombuffer(payload, dtype=np.uint8).reshape(3, n, row_bytes)
    pi_b_theta, _pi_b_r1, pi_b_r2 = view[0], view[1], view[2]
    pi_b_gamma = prf_apply(k_a2, pi_b_r2)
    s_a = pi_b_theta ^ pi_b_gamma
    return ShuffledShare(blocks=s_a, perm=pi_a)


def shuffle_provider(
    ctx: PartyContext,
    state: PrepareStateB,
    force_perm: Optional[Permutation] = None,
) -> ShuffledShare:
    n = ctx.params.n
    w = ctx.layout.total_blocks
    _, payload = ctx.ch.recv(SHUF_SIGMA)
    row_bytes = w * KEY_BYTES
    if len(payload) != 2 * n * row_bytes:
        raise ProtocolError("SHUF_SIGMA length mismatch")
    view = np.frombuffer(payload, dtype=np.uint8)
    sigma = view[: n * row_bytes].reshape(n, row_bytes)
    # pi_A(R^A) accompanies sigma per the protocol message flow; the provider
    # stores it with the transcript but needs no further use for it.
    r1 = sample_matrix(ctx.rng, n, w)
    r2 = sample_matrix(ctx.rng, n, w)

    nb = n * w
    key_bits = blocks_to_bits(
        np.frombuffer(state.k_b.material, dtype=np.uint8)[None, :]
    ).ravel()
    delta_ref = ctx.gc.execute(
        build_prf_circuit(ctx.params.prf_id, nb, key_owner="B"), {"key": key_bits}
    ).shared["out"]
    gamma_ref = ctx.gc.execute(
        build_prf_circuit(ctx.params.prf_id, nb, key_owner="A"),
        {"data": blocks_to_bits(r2.reshape(nb, KEY_BYTES)).ravel()},
    ).shared["out"]
    omega = prf_apply(state.k_b, r1)
    sigma_omega = sigma ^ omega
    theta_bits = ctx.gc.execute(
        build_theta_circuit(nb * 128),
        {"sigma_omega": blocks_to_bits(sigma_omega.reshape(nb, KEY_BYTES)).ravel()},
        {"delta": delta_ref, "gamma": gamma_ref},
    ).released["theta"]
    theta = bits_to_blocks(theta_bits.reshape(nb, 128)).reshape(n, row_bytes)

    pi_b = force_perm if force_perm is not None else sample_permutation(ctx.rng, n)
    ctx.ch.send(
        SHUF_OUT,
        pi_b.apply(theta).tobytes()
        + pi_b.apply(r1).tobytes()
        + pi_b.apply(r2).tobytes(),
    )
    s_b = pi_b.apply(omega)
    return ShuffledShare(blocks=s_b, perm=pi_b)


# ---- composite phase -------------------------------------------------------------


@dataclass
class ShufflePhaseResult:
    shares: SplitShares
    share: ShuffledShare
    prepare_debug: dict
    elapsed: float


def consumer_shuffle_phase(
    ctx: PartyContext, O_a: np.ndarray, P_a: np.ndarray, force_identity: bool = False
) -> ShufflePhaseResult:
    """O_a, P_a: the consumer's (n, m_a) matrix, already row-aligned."""
    t0 = time.perf_counter()
    lay = ctx.layout
    seg = pack_consumer_segment(O_a, P_a, lay)
    ctx.ch.transcript.set_phase("prepare")
    st = prepare_consumer(ctx, seg)
    ctx.ch.transcript.set_phase("shuffle")
    share = shuffle_consumer(
        ctx, st, Permutation.identity(ctx.params.n) if force_identity else None
    )
    shares = split_payload(share.blocks, lay)
    return ShufflePhaseResult(shares, share, st.debug, time.perf_counter() - t0)


def provider_shuffle_phase(
    ctx: PartyContext,
    O_b: np.ndarray,
    P_b: np.ndarray,
    prior: np.ndarray,
    assign: np.ndarray,
    force_identity: bool = False,
) -> ShufflePhaseResult:
    """O_b, P_b: the provider's (n, m_b) matrix, plus its strategy vectors."""
    t0 = time.perf_counter()
    lay = ctx.layout
    seg = pack_provider_segment(O_b, P_b, prior, assign, lay)
    ctx.ch.transcript.set_phase("prepare")
    st = prepare_provider(ctx, seg)
    ctx.ch.transcript.set_phase("shuffle")
    share = shuffle_provider(
        ctx, st, Permutation.identity(ctx.params.n) if force_identity else None
    )
    shares = split_payload(share.blocks, lay)
    return ShufflePhaseResult(shares, share, st.debug, time.perf_counter() - t0)
