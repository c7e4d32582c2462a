import numpy as np
import pytest

from conftest import session_pair, split_shares
from oblivsat.cnf import CnfFormula, CnfMatrix, random_3cnf, to_matrix
from oblivsat.crypto.otp import PRIOR_BITS
from oblivsat.gc.builder import CircuitBuilder, TARGET_SHARED, bus_to_int
from oblivsat.gc.engine import recombine
from oblivsat.plain import _cc, _res, _select, _uls, brute_force_sat, dpll_plain
from oblivsat.protocol import VerifyJob, cnf_common_names, run_pair, split_clauses
from oblivsat.solver.circuits import build_branch, build_cc, build_res, build_uls, index_width
from oblivsat.transport import ROLE_CONSUMER, ROLE_PROVIDER


def ingest_circuit(counts):
    cb = CircuitBuilder()
    for name, k in counts.items():
        cb.output(name, cb.shared_input(name + "_in", k), TARGET_SHARED)
    return cb.build()


def bitsplit(rng, **values):
    """Split each named bit array into uniform shares for the two parties."""
    a, b = {}, {}
    for name, bits in values.items():
        sa, sb = split_shares(np.asarray(bits, dtype=np.uint8).ravel(), rng)
        a[name + "_in.a"] = sa
        b[name + "_in.b"] = sb
    return a, b


def prior_to_bits(prior):
    prior = np.asarray(prior, dtype=np.uint64)
    return ((prior[:, None] >> np.arange(PRIOR_BITS, dtype=np.uint64)) & 1).astype(np.uint8)


def run_subroutine(rng, counts, values, steps):
    """Ingest shared values, then run `steps(session, refs) -> outputs`."""
    ing = ingest_circuit(counts)
    a_bits, b_bits = bitsplit(rng, **values)

    def side(my_bits):
        def go(sess, ch):
            refs = dict(sess.execute(ing, my_bits).shared)
            return steps(sess, refs)

        return go

    return session_pair(side(a_bits), side(b_bits))


# ---- oblivious resolution ---------------------------------------------------------


def res_case(rng, O, P, assign, c, i0, has_c=True):
    n, m = O.shape
    counts = {"O": n * m, "P": n * m, "assign": n, **({"c": m} if has_c else {})}
    values = {"O": O, "P": P, "assign": assign, **({"c": c} if has_c else {})}

    def steps(sess, refs):
        circ = build_res(n, m, i0, has_c=has_c)
        carried = {k: refs[k] for k in ("O", "P", "assign")}
        if has_c:
            carried["c"] = refs["c"]
        r = sess.execute(circ, {}, carried)
        return r.shared["O_out"], r.shared["c_out"]

    (oa, ca_), (ob, cb_) = run_subroutine(rng, counts, values, steps)
    got_O = recombine(oa, ob).reshape(n, m)
    got_c = recombine(ca_, cb_)
    want_O, want_c = _res(O.copy(), P, c.astype(bool), i0 - 1, bool(assign[i0 - 1]))
    assert np.array_equal(got_O, want_O)
    assert np.array_equal(got_c.astype(bool), want_c)
    return got_O, got_c


def test_res_satisfying_literal_clears_column(rng):
    # (x1 | x2) & (~x1), assign x1 := true
    M = to_matrix(CnfFormula(2, [[1, 2], [-1]]))
    got_O, got_c = res_case(
        rng, M.O, M.P, np.array([1, 1], np.uint8), np.zeros(2, np.uint8), i0=1
    )
    assert got_O[:, 0].tolist() == [0, 0] and got_c[0] == 1
    assert got_O[0, 1] == 0 and got_c[1] == 0


def test_res_absent_variable_untouched(rng):
    M = to_matrix(CnfFormula(3, [[1, 2]]))
    got_O, got_c = res_case(
        rng, M.O, M.P, np.ones(3, np.uint8), np.zeros(1, np.uint8), i0=3
    )
    assert got_O[:2, 0].tolist() == [1, 1] and got_c[0] == 0


def test_res_falsifying_literal_empties_clause(rng):
    M = to_matrix(CnfFormula(1, [[1]]))
    got_O, got_c = res_case(
        rng, M.O, M.P, np.array([0], np.uint8), np.zeros(1, np.uint8), i0=1
    )
    assert got_O[0, 0] == 0 and got_c[0] == 0


def test_res_random_against_plain(rng):
    for _ in range(25):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 9))
        O = rng.integers(0, 2, (n, m), dtype=np.uint8)
        P = O & rng.integers(0, 2, (n, m), dtype=np.uint8)
        res_case(
            rng,
            O,
            P,
            rng.integers(0, 2, n, dtype=np.uint8),
            rng.integers(0, 2, m, dtype=np.uint8),
            i0=int(rng.integers(1, n + 1)),
        )


# ---- contradiction check ----------------------------------------------------------


def cc_case(rng, O, c):
    n, m = O.shape
    counts = {"O": n * m, "c": m}
    values = {"O": O, "c": c}

    def steps(sess, refs):
        r = sess.execute(build_cc(n, m), {}, {"O": refs["O"], "c": refs["c"]})
        return bool(r.released["b_s"][0]), bool(r.released["b_c"][0])

    (ra), (rb) = run_subroutine(rng, counts, values, steps)
    assert ra == rb
    want_s, want_c = _cc(O, c.astype(bool))
    assert ra == (want_s, want_c)
    return ra


def test_cc_all_removed(rng):
    O = np.zeros((2, 3), np.uint8)
    assert cc_case(rng, O, np.ones(3, np.uint8)) == (True, False)


def test_cc_empty_unremoved_column(rng):
    O = np.array([[1, 0], [0, 0]], np.uint8)
    assert cc_case(rng, O, np.zeros(2, np.uint8)) == (False, True)


def test_cc_untouched_formula(rng):
    M = to_matrix(CnfFormula(2, [[1], [2]]))
    assert cc_case(rng, M.O, np.zeros(2, np.uint8)) == (False, False)


# ---- unit literal search ----------------------------------------------------------


def uls_case(rng, O, P, u, assign, prior, d, fresh=False):
    n, m = O.shape
    counts = {"O": n * m, "P": n * m, "prior": n * PRIOR_BITS, "assign": n, "u": n}
    values = {
        "O": O,
        "P": P,
        "prior": prior_to_bits(prior),
        "assign": assign,
        "u": u,
    }

    def steps(sess, refs):
        r = sess.execute(
            build_uls(n, m, d, fresh=False),
            {},
            {k: refs[k] for k in ("O", "P", "prior", "assign", "u")},
        )
        return (
            bus_to_int(r.released["ind"]),
            r.shared["u_out"],
            r.shared["assign_out"],
        )

    (ia, ua, aa), (ib, ub, ab) = run_subroutine(rng, counts, values, steps)
    assert ia == ib
    got_u = recombine(ua, ub).astype(bool)
    got_assign = recombine(aa, ab).astype(bool)
    want_u, want_assign, want_ind = _uls(
        O, P, u.astype(bool), assign.astype(bool), np.asarray(prior), d
    )
    assert ia == want_ind
    assert np.array_equal(got_u, want_u)
    assert np.array_equal(got_assign, want_assign)
    return ia, got_u, got_assign


def test_uls_single_negative_unit(rng):
    M = to_matrix(CnfFormula(2, [[-2], [1, 2]]))
    ind, u, assign = uls_case(
        rng,
        M.O,
        M.P,
        np.zeros(2, np.uint8),
        np.ones(2, np.uint8),
        np.array([2, 1]),
        np.zeros(2, bool),
    )
    assert ind == 2 and u.tolist() == [False, True]
    assert assign[1] == False  # forced to the literal's polarity  # noqa: E712


def test_uls_no_units(rng):
    M = to_matrix(CnfFormula(2, [[1, 2]]))
    ind, _, _ = uls_case(
        rng,
        M.O,
        M.P,
        np.zeros(2, np.uint8),
        np.ones(2, np.uint8),
        np.array([2, 1]),
        np.zeros(2, bool),
    )
    assert ind == 0


def test_uls_priority_tiebreak(rng):
    # two unit clauses, priorities 5 and 9: the higher priority wins
    M = to_matrix(CnfFormula(2, [[1], [2]]))
    ind, _, _ = uls_case(
        rng,
        M.O,
        M.P,
        np.zeros(2, np.uint8),
        np.ones(2, np.uint8),
        np.array([5, 9]),
        np.zeros(2, bool),
    )
    assert ind == 2


def test_uls_random_against_plain(rng):
    for _ in range(25):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 9))
        O = rng.integers(0, 2, (n, m), dtype=np.uint8)
        P = O & rng.integers(0, 2, (n, m), dtype=np.uint8)
        uls_case(
            rng,
            O,
            P,
            rng.integers(0, 2, n, dtype=np.uint8),
            rng.integers(0, 2, n, dtype=np.uint8),
            rng.integers(1, 30, n),
            rng.integers(0, 2, n).astype(bool),
        )


# ---- branching --------------------------------------------------------------------


def branch_case(rng, prior, d):
    n = len(prior)
    counts = {"prior": n * PRIOR_BITS}
    values = {"prior": prior_to_bits(prior)}

    def steps(sess, refs):
        r = sess.execute(build_branch(n, d), {}, {"prior": refs["prior"]})
        return bus_to_int(r.released["ind"])

    ia, ib = run_subroutine(rng, counts, values, steps)
    assert ia == ib
    want = _select(np.where(~np.asarray(d), np.asarray(prior), 0))
    assert ia == want
    return ia


def test_branch_all_undecided(rng):
    assert branch_case(rng, [3, 1, 2], np.zeros(3, bool)) == 1


def test_branch_skips_decided(rng):
    assert branch_case(rng, [3, 1, 2], np.array([True, False, False])) == 3


def test_branch_random_against_plain(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        prior = rng.integers(1, 40, n)
        d = rng.integers(0, 2, n).astype(bool)
        if d.all():
            d[rng.integers(0, n)] = False
        branch_case(rng, prior, d)


# ---- full solve -------------------------------------------------------------------


def solve_formula(f, seed=0):
    names = cnf_common_names(f.num_vars)
    fa, fb = split_clauses(f)
    ja = VerifyJob(ROLE_CONSUMER, fa, names, deterministic=True, seed=seed)
    jb = VerifyJob(ROLE_PROVIDER, fb, names, deterministic=True, seed=seed)
    return run_pair(ja, jb)


def test_solve_contradiction():
    ra, rb = solve_formula(CnfFormula(1, [[1], [-1]]))
    assert ra.verdict == "UNSAT" and rb.verdict == "UNSAT"


def test_solve_satisfiable_two_clause():
    ra, rb = solve_formula(CnfFormula(2, [[1, 2], [-1, 2]]))
    assert ra.sat and rb.sat
    assert brute_force_sat(CnfFormula(2, [[1, 2], [-1, 2]]))


def test_solve_event_streams_identical_and_pattern_equivalent():
    rng = np.random.default_rng(8)
    for k in range(6):
        f = random_3cnf(7, 14, rng)
        ra, rb = solve_formula(f, seed=50 + k)
        assert ra.events == rb.events
        assert ra.sat == rb.sat == brute_force_sat(f)
        sa, sb = ra.debug["solver_shares"], rb.debug["solver_shares"]
        prior = (
            (sa.prior ^ sb.prior).astype(np.uint64)
            << np.arange(PRIOR_BITS, dtype=np.uint64)
        ).sum(1)
        pr = dpll_plain(
            CnfMatrix(sa.O ^ sb.O, sa.P ^ sb.P),
            prior,
            (sa.assign ^ sb.assign).astype(bool),
        )
        assert pr.trace == ra.events
        assert pr.iterations == ra.solve_result.metrics.iterations


def test_step_bound_at_most_four_circuits_per_iteration():
    ra, _ = solve_formula(CnfFormula(3, [[1, 2], [-1, 3], [-2, -3], [1, 3]]), seed=3)
    runs = ra.solve_result.metrics.circuit_runs
    iters = ra.solve_result.metrics.iterations
    assert sum(runs.values()) <= 4 * iters
    assert runs["uls"] <= iters and runs.get("res", 0) <= iters


def test_circuit_gate_counts_linear_in_nm():
    for n, m in [(5, 10), (10, 20), (20, 40)]:
        d = np.zeros(n, bool)
        total = (
            build_res(n, m, 1, True).and_count
            + build_cc(n, m).and_count
            + build_uls(n, m, d, fresh=False).and_count
            + build_branch(n, d).and_count
        )
        bound = 14 * n * m + 90 * n + 10 * m + 200
        assert total <= bound, (n, m, total, bound)


def test_zero_clause_formula_is_satisfiable():
    ra, rb = solve_formula(CnfFormula(2, []), seed=1)
    assert ra.sat and rb.sat
