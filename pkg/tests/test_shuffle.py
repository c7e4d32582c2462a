import numpy as np
import pytest

from conftest import run_two_party
from oblivsat.crypto.groups import OT_GROUP_TEST
from oblivsat.crypto.otp import PayloadLayout, otp_decrypt, otp_encrypt, pack_consumer_segment, pack_provider_segment, split_payload
from oblivsat.crypto.prf import PRF_TC16, prf_apply
from oblivsat.crypto.rng import KEY_BYTES, Permutation, party_rng
from oblivsat.gc.engine import EVALUATOR, GARBLER, GcSession
from oblivsat.shuffle import (
    PartyContext,
    consumer_shuffle_phase,
    prepare_consumer,
    prepare_provider,
    provider_shuffle_phase,
    shuffle_consumer,
    shuffle_provider,
)
from oblivsat.transport import (
    ROLE_CONSUMER,
    ROLE_PROVIDER,
    FrameChannel,
    LocalParams,
    ProtocolTranscript,
    common_names_hash,
    handshake,
)


def random_instance(rng, n, m_a, m_b):
    m = m_a + m_b
    O = rng.integers(0, 2, (n, m), dtype=np.uint8)
    P = O & rng.integers(0, 2, (n, m), dtype=np.uint8)
    prior = rng.integers(1, 1 << 10, n, dtype=np.uint64)
    assign = rng.integers(0, 2, n, dtype=np.uint8)
    return O, P, prior, assign


def run_shuffle(
    n,
    m_a,
    m_b,
    O,
    P,
    prior,
    assign,
    seed=0,
    packed=True,
    perm_a=None,
    perm_b=None,
    prepare_only=False,
):
    names = [f"v{i}" for i in range(n)]

    def ctx_for(role, endpoint):
        ch = FrameChannel(endpoint, ProtocolTranscript(keep_payloads=True))
        params = handshake(
            ch,
            LocalParams(
                role=role,
                n_common=n,
                n_aux=0,
                m=m_a if role == ROLE_CONSUMER else m_b,
                prf_id=PRF_TC16,
                ot_group=OT_GROUP_TEST,
                block_packing=packed,
                deterministic=True,
                seed=seed,
                common_hash=common_names_hash(names),
            ),
        )
        gc = GcSession(
            ch,
            EVALUATOR if role == ROLE_CONSUMER else GARBLER,
            party_rng(seed, role + ".gc"),
            OT_GROUP_TEST,
        )
        return PartyContext(
            ch=ch, params=params, rng=party_rng(seed, role + ".proto"), gc=gc
        )

    lay = PayloadLayout(m_a, m_b, packed)
    seg_a = pack_consumer_segment(O[:, :m_a], P[:, :m_a], lay)
    seg_b = pack_provider_segment(O[:, m_a:], P[:, m_a:], prior, assign, lay)

    def side_a(endpoint):
        ctx = ctx_for(ROLE_CONSUMER, endpoint)
        ctx.ch.transcript.set_phase("prepare")
        st = prepare_consumer(ctx, seg_a)
        if prepare_only:
            return st, None, ctx.ch.transcript
        ctx.ch.transcript.set_phase("shuffle")
        share = shuffle_consumer(ctx, st, perm_a)
        return st, share, ctx.ch.transcript

    def side_b(endpoint):
        ctx = ctx_for(ROLE_PROVIDER, endpoint)
        ctx.ch.transcript.set_phase("prepare")
        st = prepare_provider(ctx, seg_b)
        if prepare_only:
            return st, None, ctx.ch.transcript
        ctx.ch.transcript.set_phase("shuffle")
        share = shuffle_provider(ctx, st, perm_b)
        return st, share, ctx.ch.transcript

    (sta, sha, ta), (stb, shb, tb) = run_two_party(side_a, side_b)
    payload = np.hstack([seg_a, seg_b])
    return dict(
        state_a=sta,
        state_b=stb,
        share_a=sha,
        share_b=shb,
        transcript_a=ta,
        transcript_b=tb,
        payload=payload,
        layout=lay,
    )


def test_prepare_ciphertext_decrypts_to_joint_payload(rng):
    n, m_a, m_b = 6, 4, 5
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, prepare_only=True)
    # test-mode oracle holding both states removes the provider-key pad
    recovered = otp_decrypt(r["state_a"].E, r["state_b"].k_b, r["state_a"].R)
    assert np.array_equal(recovered, r["payload"])


def test_prepare_zero_consumer_half_is_prf_of_pad(rng):
    n, m_a, m_b = 5, 3, 3
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    O[:, :m_a] = 0
    P[:, :m_a] = 0
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, prepare_only=True)
    lay = r["layout"]
    a_bytes = lay.a_blocks * KEY_BYTES
    e_a = r["state_a"].E[:, :a_bytes]
    r_b_a = r["state_a"].R[:, :a_bytes]
    assert np.array_equal(e_a, prf_apply(r["state_b"].k_b, r_b_a))


def test_prepare_line5_cancellation(rng):
    # Enc{Phi^A}{k_A}{R^A} == Enc{F^A}{k_B}{R^B_A}: the consumer's own pad
    # cancels, leaving the provider-keyed ciphertext of the consumer segment
    n, m_a, m_b = 7, 5, 4
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, prepare_only=True)
    dbg = r["state_a"].debug
    lay = r["layout"]
    a_bytes = lay.a_blocks * KEY_BYTES
    left = otp_encrypt(dbg["phi_a"], dbg["k_a"], dbg["r_a"])
    seg_a = pack_consumer_segment(O[:, :m_a], P[:, :m_a], lay)
    right = otp_encrypt(
        seg_a, r["state_b"].k_b, r["state_b"].debug["r_b_a"]
    )
    assert np.array_equal(left, right)


def test_prepare_transcript_shape_independent_of_consumer_formula(rng):
    n, m_a, m_b = 6, 4, 4
    O1, P1, prior, assign = random_instance(rng, n, m_a, m_b)
    O2, P2, _, _ = random_instance(rng, n, m_a, m_b)
    r1 = run_shuffle(n, m_a, m_b, O1, P1, prior, assign, prepare_only=True)
    r2 = run_shuffle(n, m_a, m_b, O2, P2, prior, assign, prepare_only=True)
    assert r1["transcript_a"].shape() == r2["transcript_a"].shape()


def test_shuffle_identity_perms_recovers_input(rng):
    n, m_a, m_b = 6, 3, 4
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    ident = Permutation.identity(n)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, perm_a=ident, perm_b=ident)
    got = r["share_a"].blocks ^ r["share_b"].blocks
    assert np.array_equal(got, r["payload"])


def test_shuffle_specific_composition(rng):
    # pi_A = (2,3,1), pi_B = (1,3,2) in one-line notation; the recombined
    # matrix equals the brute-force composition applied to the input
    n, m_a, m_b = 3, 2, 2
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    pa = Permutation.from_one_line([2, 3, 1])
    pb = Permutation.from_one_line([1, 3, 2])
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, perm_a=pa, perm_b=pb)
    got = r["share_a"].blocks ^ r["share_b"].blocks
    # independent composition: move row i to pb(pa(i))
    expected = np.empty_like(r["payload"])
    for i in range(n):
        expected[pb.dest[pa.dest[i]]] = r["payload"][i]
    assert np.array_equal(got, expected)


def test_shuffle_recombination_random_perms(rng):
    n, m_a, m_b = 9, 6, 7
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, seed=21)
    perm = r["share_b"].perm.compose_after(r["share_a"].perm)
    got = r["share_a"].blocks ^ r["share_b"].blocks
    assert np.array_equal(got, perm.apply(r["payload"]))


def test_shuffle_all_strategy_rides_same_permutation(rng):
    n, m_a, m_b = 8, 5, 6
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, seed=4)
    perm = r["share_b"].perm.compose_after(r["share_a"].perm)
    lay = r["layout"]
    sh = split_payload(r["share_a"].blocks ^ r["share_b"].blocks, lay)
    # recombined prior is a permutation of the source priorities
    got_prior = (sh.prior.astype(np.uint64) << np.arange(16, dtype=np.uint64)).sum(1)
    assert sorted(got_prior.tolist()) == sorted(prior.tolist())
    # row i of the formula and entry i of the strategy refer to the same variable
    assert np.array_equal(sh.O, perm.apply(O))
    assert np.array_equal(got_prior, perm.apply(prior))
    assert np.array_equal(sh.assign, perm.apply(assign))


def test_shuffle_constant_assign_stays_constant(rng):
    n, m_a, m_b = 5, 3, 3
    O, P, prior, _ = random_instance(rng, n, m_a, m_b)
    assign = np.zeros(n, dtype=np.uint8)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, seed=6)
    sh = split_payload(r["share_a"].blocks ^ r["share_b"].blocks, r["layout"])
    assert not sh.assign.any()


def test_permutations_never_on_the_wire(rng):
    n, m_a, m_b = 16, 8, 8
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, seed=13)
    wire = b"".join(rec.payload for rec in r["transcript_a"].records)
    for share in (r["share_a"], r["share_b"]):
        for dtype in ("<u2", "u1"):
            pattern = share.perm.dest.astype(dtype).tobytes()
            assert pattern not in wire


def test_transcript_shapes_match_for_different_inputs_same_shape(rng):
    n, m_a, m_b = 6, 4, 4
    O1, P1, prior, assign = random_instance(rng, n, m_a, m_b)
    O2, P2, prior2, assign2 = random_instance(rng, n, m_a, m_b)
    r1 = run_shuffle(n, m_a, m_b, O1, P1, prior, assign, seed=3)
    r2 = run_shuffle(n, m_a, m_b, O2, P2, prior2, assign2, seed=3)
    assert r1["transcript_a"].shape() == r2["transcript_a"].shape()
    assert r1["transcript_b"].shape() == r2["transcript_b"].shape()


def test_unpacked_layout_also_recombines(rng):
    n, m_a, m_b = 4, 3, 2
    O, P, prior, assign = random_instance(rng, n, m_a, m_b)
    r = run_shuffle(n, m_a, m_b, O, P, prior, assign, seed=8, packed=False)
    perm = r["share_b"].perm.compose_after(r["share_a"].perm)
    got = r["share_a"].blocks ^ r["share_b"].blocks
    assert np.array_equal(got, perm.apply(r["payload"]))
