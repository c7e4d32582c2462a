import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oblivsat.errors import EncodingError
from oblivsat.gc.builder import (
    CONST_FALSE,
    CONST_TRUE,
    Circuit,
    CircuitBuilder,
    GateBlock,
    InputDecl,
    OutputDecl,
    TARGET_BOTH,
    bus_to_int,
    eval_plain,
)


def test_single_and_gate_count():
    cb = CircuitBuilder()
    a = cb.a_input("a", 1)
    b = cb.b_input("b", 1)
    cb.output("o", cb.and_(a, b), TARGET_BOTH)
    c = cb.build()
    assert c.and_count == 1


def test_eq_macro_over_8_bits():
    cb = CircuitBuilder()
    a = cb.a_input("a", 8)
    b = cb.b_input("b", 8)
    cb.output("o", np.asarray([cb.eq(a, b)]), TARGET_BOTH)
    c = cb.build()
    c.validate()
    for x, y in [(5, 5), (5, 9), (255, 255), (0, 128)]:
        out = eval_plain(c, {"a": [(x >> k) & 1 for k in range(8)], "b": [(y >> k) & 1 for k in range(8)]})
        assert out["o"][0] == (x == y)


def test_mux_truth_table():
    cb = CircuitBuilder()
    s = cb.a_input("s", 1)
    a = cb.a_input("a", 1)
    b = cb.b_input("b", 1)
    cb.output("o", cb.mux(s, a, b), TARGET_BOTH)
    c = cb.build()
    for sv in (0, 1):
        for av in (0, 1):
            for bv in (0, 1):
                out = eval_plain(c, {"s": [sv], "a": [av], "b": [bv]})
                assert out["o"][0] == (av if sv else bv)


def test_constant_folding_no_gates():
    cb = CircuitBuilder()
    x = cb.a_input("x", 4)
    zeros = np.full(4, CONST_FALSE)
    ones = np.full(4, CONST_TRUE)
    assert np.array_equal(cb.and_(x, zeros), zeros)
    assert np.array_equal(cb.and_(x, ones), x)
    assert np.array_equal(cb.xor(x, zeros), x)
    assert cb.build().and_count == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**12 - 1), st.integers(0, 2**12 - 1))
def test_add_matches_integers(x, y):
    cb = CircuitBuilder()
    a = cb.a_input("a", 12)
    b = cb.b_input("b", 12)
    cb.output("s", cb.add(a, b), TARGET_BOTH)
    c = cb.build()
    out = eval_plain(c, {"a": [(x >> k) & 1 for k in range(12)], "b": [(y >> k) & 1 for k in range(12)]})
    assert bus_to_int(out["s"]) == x + y


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**10 - 1), st.integers(0, 2**10 - 1))
def test_gt_matches_integers(x, y):
    cb = CircuitBuilder()
    a = cb.a_input("a", 10)
    b = cb.b_input("b", 10)
    cb.output("g", np.asarray([cb.gt(a, b)]), TARGET_BOTH)
    c = cb.build()
    out = eval_plain(c, {"a": [(x >> k) & 1 for k in range(10)], "b": [(y >> k) & 1 for k in range(10)]})
    assert out["g"][0] == (x > y)


def test_argmax_leftmost_ties():
    keys = np.array([[3, 7, 7, 2, 7]]).T  # values, one per row
    cb = CircuitBuilder()
    kbus = cb.b_input("k", 5 * 4).reshape(5, 4)
    idx = np.stack([cb.const_bus(i + 1, 3) for i in range(5)])
    kw, iw = cb.argmax_leftmost(kbus, idx)
    cb.output("i", iw, TARGET_BOTH)
    c = cb.build()
    bits = [((int(v) >> k) & 1) for v in keys[:, 0] for k in range(4)]
    out = eval_plain(c, {"k": bits})
    assert bus_to_int(out["i"]) == 2  # lowest index among the maxima


def test_validate_rejects_reused_wire():
    bad = Circuit(
        n_wires=4,
        inputs=[InputDecl("x", "a", np.array([2]))],
        blocks=[
            GateBlock("and", np.array([2]), np.array([2]), np.array([3])),
            GateBlock("xor", np.array([2]), np.array([2]), np.array([3])),
        ],
        outputs=[],
        and_count=1,
    )
    with pytest.raises(EncodingError, match="twice"):
        bad.validate()


def test_validate_rejects_forward_reference():
    bad = Circuit(
        n_wires=4,
        inputs=[InputDecl("x", "a", np.array([2]))],
        blocks=[GateBlock("and", np.array([2]), np.array([3]), np.array([3]))],
        outputs=[],
        and_count=1,
    )
    with pytest.raises(EncodingError):
        bad.validate()


def test_duplicate_names_rejected():
    cb = CircuitBuilder()
    cb.a_input("x", 1)
    with pytest.raises(EncodingError):
        cb.b_input("x", 1)


def test_reduce_empty_identities():
    cb = CircuitBuilder()
    empty = np.zeros(0, dtype=np.int64)
    assert cb.and_reduce(empty) == CONST_TRUE
    assert cb.or_reduce(empty) == CONST_FALSE
