"""Two-party garbled-circuit session.

Role assignment is fixed for the whole session: the provider (B) garbles,
the consumer (A) evaluates.  One ``execute`` call runs one circuit in
lock-step:

    B -> A   GC_TABLES   tables, garbler-input labels, decode bits
    A -> B   OT_REQ      receiver keys for A's fresh input bits (if any)
    B -> A   OT_RESP     label ciphertexts
    A -> B   REL_B       select bits of garbler-released outputs (if any)
    A -> B   REL_PUB     plaintext of publicly released outputs (if any)

Values that persist between circuits (the paper's bracketed values) are
``SecretRef``s: the evaluator keeps the active label of each wire, the
garbler keeps the wire's label pair.  Neither side alone determines the
value, recombination happens only by feeding the labels into a later circuit
(or through the explicit test-mode oracle), and carrying a value costs no
traffic at all.  Negating a shared bit is local bookkeeping: the garbler
offsets its false label by delta.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..crypto.ot import OtReceiver, OtSender, ot_group
from ..errors import EncodingError, ProtocolError
from ..transport import (
    GC_TABLES,
    OT_REQ,
    OT_RESP,
    OT_SETUP,
    REL_B,
    REL_PUB,
    FrameChannel,
)
from .builder import (
    OWNER_A,
    OWNER_B,
    OWNER_CARRY,
    TARGET_A,
    TARGET_B,
    TARGET_BOTH,
    TARGET_SHARED,
    Circuit,
)
from .garble import (
    LABEL_BYTES,
    evaluate,
    garble,
    init_label0,
    recombine_bits,
    sample_delta,
    sample_labels,
    select_bits,
)

EVALUATOR = "A"
GARBLER = "B"

_TABLES_HDR = struct.Struct("<IIII")


@dataclass
class SecretRef:
    """Handle to unreleased wire values carried between circuits."""

    session: "GcSession" = field(repr=False)
    nbits: int
    a_active: Optional[np.ndarray] = field(default=None, repr=False)
    b_label0: Optional[np.ndarray] = field(default=None, repr=False)

    def slice(self, idx) -> "SecretRef":
        a = self.a_active[idx] if self.a_active is not None else None
        b = self.b_label0[idx] if self.b_label0 is not None else None
        n = a.shape[0] if a is not None else b.shape[0]
        return SecretRef(self.session, n, a, b)


@dataclass
class ExecResult:
    released: Dict[str, np.ndarray]
    shared: Dict[str, SecretRef]


def _pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def _unpack_bits(data: bytes, n: int) -> np.ndarray:
    return np.unpackbits(
        np.frombuffer(data, dtype=np.uint8), count=n, bitorder="little"
    )


class GcSession:
    """One per verification session; shares the channel with the rest of the
    protocol and owns the free-XOR delta (garbler side) and OT state."""

    def __init__(
        self,
        ch: FrameChannel,
        role: str,
        rng: np.random.Generator,
        ot_group_id: int,
    ):
        if role not in (EVALUATOR, GARBLER):
            raise ValueError("role must be 'A' or 'B'")
        self.ch = ch
        self.role = role
        self.rng = rng
        self.gid = 0
        group = ot_group(ot_group_id)
        if role == GARBLER:
            self.delta = sample_delta(rng)
            self.ot_sender = OtSender(group, rng)
            ch.send(OT_SETUP, self.ot_sender.setup_bytes())
        else:
            self.delta = None
            self.ot_receiver = OtReceiver(group, rng)
            _, payload = ch.recv(OT_SETUP)
            self.ot_receiver.load_setup(payload)

    # ---- helpers shared by both roles ---------------------------------------

    @staticmethod
    def _check_bits(circuit: Circuit, owner: str, my_bits: Dict[str, np.ndarray]):
        for decl in circuit.inputs:
            if decl.owner != owner:
                continue
            if decl.name not in my_bits:
                raise EncodingError(f"missing input bits for {decl.name!r}")
            got = np.asarray(my_bits[decl.name]).ravel()
            if got.shape[0] != decl.wires.shape[0]:
                raise EncodingError(
                    f"input {decl.name!r}: arity mismatch "
                    f"({got.shape[0]} != {decl.wires.shape[0]})"
                )

    def _check_carried(self, circuit: Circuit, carried: Dict[str, SecretRef]):
        for decl in circuit.inputs:
            if decl.owner != OWNER_CARRY:
                continue
            ref = carried.get(decl.name)
            if ref is None:
                raise EncodingError(f"missing carried value for {decl.name!r}")
            if ref.session is not self:
                raise ProtocolError("cross-session secret reference")
            if ref.nbits != decl.wires.shape[0]:
                raise EncodingError(f"carried {decl.name!r}: arity mismatch")

    # ---- execution ------------------------------------------------------------

    def execute(
        self,
        circuit: Circuit,
        my_bits: Dict[str, np.ndarray] | None = None,
        carried: Dict[str, SecretRef] | None = None,
    ) -> ExecResult:
        my_bits = {k: np.asarray(v, dtype=np.uint8).ravel() for k, v in (my_bits or {}).items()}
        carried = carried or {}
        self._check_carried(circuit, carried)
        if self.role == GARBLER:
            return self._execute_garbler(circuit, my_bits, carried)
        return self._execute_evaluator(circuit, my_bits, carried)

    def chain(self, prev: SecretRef, circuit: Circuit) -> SecretRef:
        """Feed a single carried value through a circuit with one carry input
        and one shared output."""
        carries = [d for d in circuit.inputs if d.owner == OWNER_CARRY]
        shared_outs = [o for o in circuit.outputs if o.target == TARGET_SHARED]
        if len(carries) != 1 or len(shared_outs) != 1:
            raise EncodingError("chain needs exactly one carry input and one shared output")
        res = self.execute(circuit, {}, {carries[0].name: prev})
        return res.shared[shared_outs[0].name]

    def flip_bits(self, ref: SecretRef, indices) -> SecretRef:
        """Logical NOT of selected shared bits; garbler-local label offset."""
        if ref.session is not self:
            raise ProtocolError("cross-session secret reference")
        if self.role == GARBLER:
            label0 = ref.b_label0.copy()
            label0[indices] ^= self.delta
            return SecretRef(self, ref.nbits, None, label0)
        return SecretRef(self, ref.nbits, ref.a_active, None)

    # ---- garbler side ----------------------------------------------------------

    def _execute_garbler(self, circuit, my_bits, carried) -> ExecResult:
        self._check_bits(circuit, OWNER_B, my_bits)
        label0 = init_label0(circuit, self.rng)
        a_wire_count = 0
        for decl in circuit.inputs:
            if decl.owner == OWNER_CARRY:
                label0[decl.wires] = carried[decl.name].b_label0
            else:
                label0[decl.wires] = sample_labels(self.rng, decl.wires.shape[0])
                if decl.owner == OWNER_A:
                    a_wire_count += decl.wires.shape[0]
        tables = garble(circuit, label0, self.delta, self.rng, self.gid)
        self.gid += circuit.and_count

        d = self.delta[None, :]
        parts = [
            _TABLES_HDR.pack(
                circuit.n_wires,
                circuit.and_count,
                sum(len(b.out) for b in circuit.blocks),
                len(circuit.outputs),
            )
        ]
        parts.append(label0[0].tobytes())  # const false, active label
        parts.append((label0[1] ^ self.delta).tobytes())  # const true
        for decl in circuit.inputs:
            if decl.owner == OWNER_B:
                bits = my_bits[decl.name]
                parts.append((label0[decl.wires] ^ bits[:, None] * d).tobytes())
        parts.append(tables)
        decode = []
        for out in circuit.outputs:
            if out.target in (TARGET_BOTH, TARGET_A):
                decode.append(select_bits(label0[out.wires]))
        if decode:
            parts.append(_pack_bits(np.concatenate(decode)))
        self.ch.send(GC_TABLES, b"".join(parts))

        if a_wire_count:
            _, req = self.ch.recv(OT_REQ)
            pairs = np.empty((a_wire_count, 2, LABEL_BYTES), dtype=np.uint8)
            pos = 0
            for decl in circuit.inputs:
                if decl.owner == OWNER_A:
                    k = decl.wires.shape[0]
                    pairs[pos : pos + k, 0] = label0[decl.wires]
                    pairs[pos : pos + k, 1] = label0[decl.wires] ^ d
                    pos += k
            self.ch.send(OT_RESP, self.ot_sender.respond(req, pairs))

        released: Dict[str, np.ndarray] = {}
        shared: Dict[str, SecretRef] = {}
        to_b = [o for o in circuit.outputs if o.target == TARGET_B]
        if to_b:
            _, payload = self.ch.recv(REL_B)
            sel = _unpack_bits(payload, sum(o.wires.shape[0] for o in to_b))
            pos = 0
            for out in to_b:
                k = out.wires.shape[0]
                perm = select_bits(label0[out.wires])
                released[out.name] = (sel[pos : pos + k] ^ perm).astype(np.uint8)
                pos += k
        to_both = [o for o in circuit.outputs if o.target == TARGET_BOTH]
        if to_both:
            _, payload = self.ch.recv(REL_PUB)
            bits = _unpack_bits(payload, sum(o.wires.shape[0] for o in to_both))
            pos = 0
            for out in to_both:
                k = out.wires.shape[0]
                released[out.name] = bits[pos : pos + k].copy()
                pos += k
        for out in circuit.outputs:
            if out.target == TARGET_SHARED:
                shared[out.name] = SecretRef(
                    self, out.wires.shape[0], None, label0[out.wires].copy()
                )
        for decl in circuit.inputs:
            shared[decl.name] = SecretRef(
                self, decl.wires.shape[0], None, label0[decl.wires].copy()
            )
        return ExecResult(released, shared)

    # ---- evaluator side --------------------------------------------------------

    def _execute_evaluator(self, circuit, my_bits, carried) -> ExecResult:
        self._check_bits(circuit, OWNER_A, my_bits)
        _, payload = self.ch.recv(GC_TABLES)
        n_wires, and_count, gate_wires, n_outputs = _TABLES_HDR.unpack(
            payload[: _TABLES_HDR.size]
        )
        if (n_wires, and_count, gate_wires, n_outputs) != circuit.shape_key():
            raise ProtocolError("peer circuit shape differs; builders out of sync")
        pos = _TABLES_HDR.size
        active = np.zeros((circuit.n_wires, LABEL_BYTES), dtype=np.uint8)

        def take(nbytes: int) -> np.ndarray:
            nonlocal pos
            if pos + nbytes > len(payload):
                raise ProtocolError("GC_TABLES payload truncated")
            out = np.frombuffer(payload[pos : pos + nbytes], dtype=np.uint8)
            pos += nbytes
            return out

        active[0] = take(LABEL_BYTES)
        active[1] = take(LABEL_BYTES)
        for decl in circuit.inputs:
            if decl.owner == OWNER_B:
                active[decl.wires] = take(decl.wires.shape[0] * LABEL_BYTES).reshape(
                    -1, LABEL_BYTES
                )
        tables = payload[pos : pos + and_count * 4 * LABEL_BYTES]
        pos += and_count * 4 * LABEL_BYTES
        decode_wires = sum(
            o.wires.shape[0]
            for o in circuit.outputs
            if o.target in (TARGET_BOTH, TARGET_A)
        )
        decode_bits = np.zeros(0, dtype=np.uint8)
        if decode_wires:
            decode_bits = _unpack_bits(payload[pos:], decode_wires)

        a_bits = []
        for decl in circuit.inputs:
            if decl.owner == OWNER_A:
                a_bits.append(my_bits[decl.name])
            elif decl.owner == OWNER_CARRY:
                active[decl.wires] = carried[decl.name].a_active
        if a_bits:
            choices = np.concatenate(a_bits)
            self.ch.send(OT_REQ, self.ot_receiver.request(choices))
            _, resp = self.ch.recv(OT_RESP)
            labels = self.ot_receiver.receive(resp)
            pos_l = 0
            for decl in circuit.inputs:
                if decl.owner == OWNER_A:
                    k = decl.wires.shape[0]
                    active[decl.wires] = labels[pos_l : pos_l + k]
                    pos_l += k

        evaluate(circuit, active, tables, self.gid)
        self.gid += circuit.and_count

        released: Dict[str, np.ndarray] = {}
        shared: Dict[str, SecretRef] = {}
        to_b = [o for o in circuit.outputs if o.target == TARGET_B]
        if to_b:
            sel = np.concatenate([select_bits(active[o.wires]) for o in to_b])
            self.ch.send(REL_B, _pack_bits(sel))
        dpos = 0
        pub_bits = []
        for out in circuit.outputs:
            if out.target in (TARGET_BOTH, TARGET_A):
                k = out.wires.shape[0]
                perm = decode_bits[dpos : dpos + k]
                dpos += k
                value = (select_bits(active[out.wires]) ^ perm).astype(np.uint8)
                released[out.name] = value
                if out.target == TARGET_BOTH:
                    pub_bits.append(value)
        if pub_bits:
            self.ch.send(REL_PUB, _pack_bits(np.concatenate(pub_bits)))
        for out in circuit.outputs:
            if out.target == TARGET_SHARED:
                shared[out.name] = SecretRef(
                    self, out.wires.shape[0], active[out.wires].copy(), None
                )
        for decl in circuit.inputs:
            shared[decl.name] = SecretRef(
                self, decl.wires.shape[0], active[decl.wires].copy(), None
            )
        return ExecResult(released, shared)


def recombine(ref_a: SecretRef, ref_b: SecretRef) -> np.ndarray:
    """Test-mode oracle joining both parties' handles to plaintext bits."""
    if ref_a.a_active is None or ref_b.b_label0 is None:
        raise ProtocolError("recombine needs the evaluator and garbler handles")
    return recombine_bits(ref_a.a_active, ref_b.b_label0)
