"""Circuit constructors for the four oblivious solver subroutines.

Each driver iteration compiles fresh circuits from public state only (shapes,
the resolved index, the public decided-flags), so both parties build the same
gates without communicating.  Matrix loops are unrolled into wide gate blocks;
per-iteration cost stays O(n*m) gates.

Index buses are LSB-first and 1-based with 0 meaning "none"; width fits n.
"""

from __future__ import annotations

import numpy as np

from ..crypto.otp import PRIOR_BITS
from ..gc.builder import (
    CONST_FALSE,
    Bus,
    CircuitBuilder,
    TARGET_BOTH,
    TARGET_SHARED,
)


def index_width(n: int) -> int:
    return max(1, int(n).bit_length())


def _exactly_one_per_column(cb: CircuitBuilder, O: Bus):
    """(one_j, any_j) for every column of the (n, m) occurrence bus, via an
    (any, at-least-two) segment tree over the rows."""
    anyv = O
    twov = np.full_like(O, CONST_FALSE)
    while anyv.shape[0] > 1:
        h = anyv.shape[0] // 2
        a_l, a_r = anyv[:h], anyv[h : 2 * h]
        t_l, t_r = twov[:h], twov[h : 2 * h]
        two = cb.or_(cb.or_(t_l, t_r), cb.and_(a_l, a_r))
        any_ = cb.or_(a_l, a_r)
        if anyv.shape[0] % 2:
            any_ = np.concatenate([any_, anyv[-1:]], axis=0)
            two = np.concatenate([two, twov[-1:]], axis=0)
        anyv, twov = any_, two
    return cb.and_(anyv[0], cb.not_(twov[0])), anyv[0]


def _last_writer(cb: CircuitBuilder, written: Bus, value: Bus):
    """Fold (written, value) pairs along the clause axis so the right-most
    written column wins; both buses are (n, m)."""
    if written.shape[1] == 0:
        none = np.full(written.shape[0], CONST_FALSE, dtype=np.int64)
        return none, none
    w, v = written, value
    while w.shape[1] > 1:
        h = w.shape[1] // 2
        # adjacent pairing: the fold is order-sensitive (right operand wins)
        w_l, w_r = w[:, : 2 * h : 2], w[:, 1 : 2 * h : 2]
        v_l, v_r = v[:, : 2 * h : 2], v[:, 1 : 2 * h : 2]
        vm = cb.mux(w_r, v_r, v_l)
        wm = cb.or_(w_l, w_r)
        if w.shape[1] % 2:
            wm = np.concatenate([wm, w[:, -1:]], axis=1)
            vm = np.concatenate([vm, v[:, -1:]], axis=1)
        w, v = wm, vm
    return w[:, 0], v[:, 0]


def _select_index(cb: CircuitBuilder, keys: Bus, n: int):
    """Leftmost maximal positive key wins; returns the 1-based index bus
    (all-zero when every key is zero)."""
    wi = index_width(n)
    idx = np.stack([cb.const_bus(i + 1, wi) for i in range(n)])
    k_win, i_win = cb.argmax_leftmost(keys, idx)
    any_k = cb.or_reduce(k_win)
    return cb.and_(np.broadcast_to(any_k, i_win.shape), i_win)


def build_uls(n: int, m: int, d: np.ndarray, fresh: bool):
    """Unit literal search.  ``fresh`` ingests the parties' post-shuffle bit
    shares and re-exports the joined matrix and strategy as shared values;
    later iterations carry them."""
    cb = CircuitBuilder()
    if fresh:
        O = cb.shared_input("O_in", n * m).reshape(n, m)
        P = cb.shared_input("P_in", n * m).reshape(n, m)
        prior = cb.shared_input("prior_in", n * PRIOR_BITS).reshape(n, PRIOR_BITS)
        assign = cb.shared_input("assign_in", n)
        u = np.full(n, CONST_FALSE, dtype=np.int64)
    else:
        O = cb.carry_input("O", n * m).reshape(n, m)
        P = cb.carry_input("P", n * m).reshape(n, m)
        prior = cb.carry_input("prior", n * PRIOR_BITS).reshape(n, PRIOR_BITS)
        assign = cb.carry_input("assign", n)
        u = cb.carry_input("u", n)

    one_j, _any_j = _exactly_one_per_column(cb, O)
    cond = cb.and_(np.broadcast_to(one_j, (n, m)), O)
    got, forced = _last_writer(cb, cond, P)
    u_new = cb.or_(u, got)
    assign_new = cb.mux(got, forced, assign)

    undecided = CircuitBuilder.const_bits(~np.asarray(d, dtype=bool))
    valid = cb.and_(u_new, undecided)
    keys = cb.and_(valid[:, None], prior)
    ind = _select_index(cb, keys, n)

    cb.output("ind", ind, TARGET_BOTH)
    cb.output("u_out", u_new, TARGET_SHARED)
    cb.output("assign_out", assign_new, TARGET_SHARED)
    if fresh:
        cb.output("O", O.ravel(), TARGET_SHARED)
        cb.output("P", P.ravel(), TARGET_SHARED)
        cb.output("prior", prior.ravel(), TARGET_SHARED)
    return cb.build()


def build_res(n: int, m: int, i0: int, has_c: bool):
    """Oblivious resolution on public permuted index i0 (1-based): clauses the
    assigned literal satisfies lose their whole column and get marked removed;
    the variable's own row clears everywhere; nothing is released."""
    cb = CircuitBuilder()
    O = cb.carry_input("O", n * m).reshape(n, m)
    P = cb.carry_input("P", n * m).reshape(n, m)
    assign = cb.carry_input("assign", n)
    c = cb.carry_input("c", m) if has_c else np.full(m, CONST_FALSE, dtype=np.int64)

    b = assign[i0 - 1]
    row_o = O[i0 - 1]
    row_p = P[i0 - 1]
    sat = cb.and_(row_o, cb.not_(cb.xor(np.broadcast_to(b, (m,)), row_p)))
    keep = cb.not_(sat)
    others = np.arange(n) != (i0 - 1)
    O_new = np.empty_like(O)
    O_new[others] = cb.and_(O[others], np.broadcast_to(keep, (n - 1, m)))
    O_new[i0 - 1] = CONST_FALSE
    c_new = cb.or_(c, sat)

    cb.output("O_out", O_new.ravel(), TARGET_SHARED)
    cb.output("c_out", c_new, TARGET_SHARED)
    return cb.build()


def build_cc(n: int, m: int):
    """Contradiction / success check: b_c = some column emptied without being
    removed; b_s = no occurrences left anywhere.  Both released publicly."""
    cb = CircuitBuilder()
    O = cb.carry_input("O", n * m).reshape(n, m)
    c = cb.carry_input("c", m)
    empty = cb.not_(cb.or_reduce(O.T, axis=-1))
    b_c = cb.or_reduce(cb.and_(empty, cb.not_(c)))
    b_s = cb.and_reduce(empty)
    cb.output("b_c", np.asarray([b_c]), TARGET_BOTH)
    cb.output("b_s", np.asarray([b_s]), TARGET_BOTH)
    return cb.build()


def build_branch(n: int, d: np.ndarray):
    """Oblivious branching: highest shared priority among publicly undecided
    variables; decided rows fold to constant-zero keys at build time."""
    cb = CircuitBuilder()
    prior = cb.carry_input("prior", n * PRIOR_BITS).reshape(n, PRIOR_BITS)
    keys = prior.copy()
    keys[np.asarray(d, dtype=bool)] = CONST_FALSE
    ind = _select_index(cb, keys, n)
    cb.output("ind", ind, TARGET_BOTH)
    return cb.build()
