"""Vectorised boolean circuit builder.

Circuits are built as an ordered list of gate blocks; gates inside one block
are independent, so a block is both a bulk-emission unit and an evaluation
level.  Wires are integer ids: 0 is constant false, 1 is constant true, and
all other ids are allocated in strictly increasing order, which makes the
graph acyclic by construction.  AND gates with a constant operand fold away
at emission time; XOR with constant false folds to an alias.

Both protocol parties build circuits locally from public parameters only, so
the builder must be fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import EncodingError

CONST_FALSE = 0
CONST_TRUE = 1

OWNER_A = "a"  # evaluator-supplied input bits (delivered by OT)
OWNER_B = "b"  # garbler-supplied input bits (labels sent directly)
OWNER_CARRY = "carry"  # bound to a SecretRef from an earlier circuit

TARGET_BOTH = "both"
TARGET_A = "a"
TARGET_B = "b"
TARGET_SHARED = "shared"

Bus = np.ndarray  # int64 array of wire ids, any shape


@dataclass
class GateBlock:
    op: str  # "and" | "xor"
    a: np.ndarray
    b: np.ndarray
    out: np.ndarray


@dataclass
class InputDecl:
    name: str
    owner: str
    wires: np.ndarray


@dataclass
class OutputDecl:
    name: str
    wires: np.ndarray
    target: str


@dataclass
class Circuit:
    n_wires: int
    inputs: List[InputDecl]
    blocks: List[GateBlock]
    outputs: List[OutputDecl]
    and_count: int

    def input_map(self) -> Dict[str, InputDecl]:
        return {d.name: d for d in self.inputs}

    def shape_key(self) -> Tuple[int, int, int, int]:
        """Cheap structural fingerprint cross-checked between the parties."""
        return (
            self.n_wires,
            self.and_count,
            sum(len(b.out) for b in self.blocks),
            len(self.outputs),
        )

    def validate(self) -> None:
        """Check wire discipline: every gate output driven once, after its inputs."""
        driven = np.zeros(self.n_wires, dtype=bool)
        driven[[CONST_FALSE, CONST_TRUE]] = True
        for decl in self.inputs:
            if driven[decl.wires].any():
                raise EncodingError(f"input {decl.name} re-drives a wire")
            driven[decl.wires] = True
        for blk in self.blocks:
            if not (driven[blk.a].all() and driven[blk.b].all()):
                raise EncodingError("gate reads an undriven wire (cycle or gap)")
            if driven[blk.out].any():
                raise EncodingError("wire driven twice")
            if (blk.out <= np.maximum(blk.a, blk.b)).any():
                raise EncodingError("gate output id not above its inputs")
            driven[blk.out] = True
        for out in self.outputs:
            if not driven[out.wires].all():
                raise EncodingError(f"output {out.name} reads an undriven wire")


def _ids(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


class CircuitBuilder:
    def __init__(self):
        self._next = 2
        self.inputs: List[InputDecl] = []
        self.blocks: List[GateBlock] = []
        self.outputs: List[OutputDecl] = []
        self.and_count = 0
        self._names: set = set()

    # ---- inputs / constants -------------------------------------------------

    def _input(self, name: str, owner: str, count: int) -> Bus:
        if name in self._names:
            raise EncodingError(f"duplicate declaration {name!r}")
        self._names.add(name)
        wires = np.arange(self._next, self._next + count, dtype=np.int64)
        self._next += count
        self.inputs.append(InputDecl(name, owner, wires))
        return wires

    def a_input(self, name: str, count: int) -> Bus:
        return self._input(name, OWNER_A, count)

    def b_input(self, name: str, count: int) -> Bus:
        return self._input(name, OWNER_B, count)

    def carry_input(self, name: str, count: int) -> Bus:
        return self._input(name, OWNER_CARRY, count)

    def shared_input(self, name: str, count: int) -> Bus:
        """An XOR-shared value: each party supplies its share, the circuit joins
        them for free.  Returns the combined bus."""
        sa = self.a_input(name + ".a", count)
        sb = self.b_input(name + ".b", count)
        return self.xor(sa, sb)

    @staticmethod
    def const_bus(value: int, width: int) -> Bus:
        return _ids([(value >> k) & 1 for k in range(width)])

    @staticmethod
    def const_bits(bits: Sequence[int]) -> Bus:
        return _ids([CONST_TRUE if b else CONST_FALSE for b in bits])

    # ---- gate emission -------------------------------------------------------

    def _alloc(self, count: int) -> np.ndarray:
        wires = np.arange(self._next, self._next + count, dtype=np.int64)
        self._next += count
        return wires

    def xor(self, x, y) -> Bus:
        x, y = np.broadcast_arrays(_ids(x), _ids(y))
        x = np.ascontiguousarray(x)
        y = np.ascontiguousarray(y)
        out = np.empty(x.shape, dtype=np.int64)
        cx, cy = x <= 1, y <= 1
        both = cx & cy
        out[both] = x[both] ^ y[both]
        fx = cx & (x == 0) & ~both
        fy = cy & (y == 0) & ~both
        out[fx] = y[fx]
        out[fy] = x[fy]
        emit = ~(both | fx | fy)
        k = int(emit.sum())
        if k:
            new = self._alloc(k)
            out[emit] = new
            self.blocks.append(GateBlock("xor", x[emit], y[emit], new))
        return out

    def and_(self, x, y) -> Bus:
        x, y = np.broadcast_arrays(_ids(x), _ids(y))
        x = np.ascontiguousarray(x)
        y = np.ascontiguousarray(y)
        out = np.empty(x.shape, dtype=np.int64)
        zero = (x == 0) | (y == 0)
        out[zero] = CONST_FALSE
        ox = (x == 1) & ~zero
        oy = (y == 1) & ~zero
        out[ox] = y[ox]
        out[oy & ~ox] = x[oy & ~ox]
        emit = ~(zero | ox | oy)
        k = int(emit.sum())
        if k:
            new = self._alloc(k)
            out[emit] = new
            self.blocks.append(GateBlock("and", x[emit], y[emit], new))
            self.and_count += k
        return out

    def not_(self, x) -> Bus:
        return self.xor(x, np.full_like(_ids(x), CONST_TRUE))

    def or_(self, x, y) -> Bus:
        return self.xor(self.xor(x, y), self.and_(x, y))

    def mux(self, c, x, y) -> Bus:
        """c=1 selects x, c=0 selects y (elementwise, c broadcasts)."""
        return self.xor(y, self.and_(c, self.xor(x, y)))

    # ---- reductions and arithmetic macros ------------------------------------

    def _reduce(self, op, x: Bus, axis: int, empty: int) -> Bus:
        x = _ids(x)
        x = np.moveaxis(x, axis, -1)
        if x.shape[-1] == 0:
            return np.full(x.shape[:-1], empty, dtype=np.int64)
        while x.shape[-1] > 1:
            k = x.shape[-1]
            h = k // 2
            merged = op(x[..., :h], x[..., h : 2 * h])
            if k % 2:
                merged = np.concatenate([merged, x[..., -1:]], axis=-1)
            x = merged
        return x[..., 0]

    def and_reduce(self, x: Bus, axis: int = -1) -> Bus:
        return self._reduce(self.and_, x, axis, CONST_TRUE)

    def or_reduce(self, x: Bus, axis: int = -1) -> Bus:
        return self._reduce(self.or_, x, axis, CONST_FALSE)

    def xor_reduce(self, x: Bus, axis: int = -1) -> Bus:
        return self._reduce(self.xor, x, axis, CONST_FALSE)

    def eq(self, x: Bus, y: Bus, axis: int = -1) -> Bus:
        """Bitwise equality reduced along axis."""
        return self.and_reduce(self.not_(self.xor(x, y)), axis)

    def gt(self, x: Bus, y: Bus) -> Bus:
        """Unsigned x > y over LSB-first buses (last axis is the bit axis).

        Log-depth (gt, eq) segment tree so wide comparisons stay shallow.
        """
        x, y = np.broadcast_arrays(_ids(x), _ids(y))
        g = self.and_(x, self.not_(y))
        e = self.not_(self.xor(x, y))
        while g.shape[-1] > 1:
            k = g.shape[-1]
            h = k // 2
            glo, ghi = g[..., : 2 * h : 2], g[..., 1 : 2 * h : 2]
            elo, ehi = e[..., : 2 * h : 2], e[..., 1 : 2 * h : 2]
            gm = self.or_(ghi, self.and_(ehi, glo))
            em = self.and_(ehi, elo)
            if k % 2:
                gm = np.concatenate([gm, g[..., -1:]], axis=-1)
                em = np.concatenate([em, e[..., -1:]], axis=-1)
            g, e = gm, em
        return g[..., 0]

    def add(self, x: Bus, y: Bus) -> Bus:
        """Ripple-carry addition of LSB-first buses; result one bit wider."""
        x, y = np.broadcast_arrays(_ids(x), _ids(y))
        carry = np.full(x.shape[:-1] + (1,), CONST_FALSE, dtype=np.int64)
        bits = []
        for k in range(x.shape[-1]):
            a, b = x[..., k : k + 1], y[..., k : k + 1]
            axb = self.xor(a, b)
            bits.append(self.xor(axb, carry))
            carry = self.xor(self.and_(a, b), self.and_(carry, axb))
        bits.append(carry)
        return np.concatenate(bits, axis=-1)

    def argmax_leftmost(self, keys: Bus, idx: Bus) -> Tuple[Bus, Bus]:
        """Tournament over rows of ``keys`` (rows, w) with attached index buses
        ``idx`` (rows, wi).  A later row wins only on a strictly greater key,
        so ties keep the lowest row, matching a sequential scan with '>'.
        Returns (winning key bus, winning index bus).
        """
        keys = _ids(keys)
        idx = _ids(idx)
        while keys.shape[0] > 1:
            r = keys.shape[0]
            h = r // 2
            kl, kr = keys[: 2 * h : 2], keys[1 : 2 * h : 2]
            il, ir = idx[: 2 * h : 2], idx[1 : 2 * h : 2]
            win_r = self.gt(kr, kl)[:, None]
            km = self.mux(win_r, kr, kl)
            im = self.mux(win_r, ir, il)
            if r % 2:
                km = np.concatenate([km, keys[-1:]], axis=0)
                im = np.concatenate([im, idx[-1:]], axis=0)
            keys, idx = km, im
        return keys[0], idx[0]

    # ---- outputs -------------------------------------------------------------

    def output(self, name: str, bus, target: str) -> None:
        if name in self._names:
            raise EncodingError(f"duplicate declaration {name!r}")
        self._names.add(name)
        if target not in (TARGET_BOTH, TARGET_A, TARGET_B, TARGET_SHARED):
            raise EncodingError(f"unknown release target {target!r}")
        self.outputs.append(OutputDecl(name, _ids(bus).ravel().copy(), target))

    def build(self) -> Circuit:
        return Circuit(
            n_wires=self._next,
            inputs=self.inputs,
            blocks=self.blocks,
            outputs=self.outputs,
            and_count=self.and_count,
        )


def eval_plain(circuit: Circuit, values: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    """Plaintext circuit evaluation; the correctness oracle for the garbled path."""
    v = np.zeros(circuit.n_wires, dtype=np.uint8)
    v[CONST_TRUE] = 1
    for decl in circuit.inputs:
        bits = np.asarray(values[decl.name], dtype=np.uint8).ravel()
        if bits.shape[0] != decl.wires.shape[0]:
            raise EncodingError(f"input {decl.name}: arity mismatch")
        v[decl.wires] = bits & 1
    for blk in circuit.blocks:
        if blk.op == "xor":
            v[blk.out] = v[blk.a] ^ v[blk.b]
        else:
            v[blk.out] = v[blk.a] & v[blk.b]
    return {out.name: v[out.wires].copy() for out in circuit.outputs}


def bus_to_int(bits: np.ndarray) -> int:
    """LSB-first bit vector to integer."""
    return int(sum(int(b) << k for k, b in enumerate(np.asarray(bits).ravel())))
