"""Plaintext reference implementations used as test oracles.

``brute_force_sat`` enumerates every assignment.  ``dpll_plain`` re-implements
the exact driver the two-party solver follows (same subroutine semantics, same
tie-breaking, same trail discipline) on plaintext data, so its event trace
must match the protocol's released search pattern bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .cnf import CnfFormula, CnfMatrix
from .errors import EncodingError
from .events import (
    BACKTRACK,
    BRANCH,
    CONTRADICTION,
    SUCCESS,
    UNIT,
    SearchEvent,
)

_FIRST, _SECOND = 0, 1
_CHUNK_BITS = 16


def brute_force_sat(f: CnfFormula, limit: int = 24) -> bool:
    """Exhaustive truth over all 2^n assignments (vectorised in chunks)."""
    n = f.num_vars
    if n > limit:
        raise EncodingError(f"{n} variables exceeds brute-force limit {limit}")
    if not f.clauses:
        return True
    if n == 0:
        return False  # nonempty clause list over zero variables is vacuously false
    chunk = 1 << min(n, _CHUNK_BITS)
    var_ids = np.arange(n, dtype=np.uint64)
    for base in range(0, 1 << n, chunk):
        vals = np.arange(base, base + chunk, dtype=np.uint64)
        bits = ((vals[:, None] >> var_ids[None, :]) & 1).astype(bool)
        ok = np.ones(chunk, dtype=bool)
        for cl in f.clauses:
            cl_sat = np.zeros(chunk, dtype=bool)
            for lit in cl:
                v = bits[:, abs(lit) - 1]
                cl_sat |= v if lit > 0 else ~v
            ok &= cl_sat
            if not ok.any():
                break
        if ok.any():
            return True
    return False


@dataclass
class PlainResult:
    sat: bool
    trace: List[SearchEvent]
    iterations: int


def _select(K: np.ndarray) -> int:
    """Leftmost index of the maximal positive key, 1-based; 0 if all keys are 0.

    Matches the oblivious scan: a strict '>' comparison against a running
    maximum seeded with 0, so the first writer is never displaced by an equal
    priority and priority-0 entries are never selected.
    """
    if K.size == 0 or K.max(initial=0) <= 0:
        return 0
    return int(np.argmax(K)) + 1


def _uls(
    O: np.ndarray,
    P: np.ndarray,
    u: np.ndarray,
    assign: np.ndarray,
    prior: np.ndarray,
    d: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Unit literal search: flag variables that are the sole remaining
    occurrence of some clause, force their assignment to that literal's
    polarity (the right-most such clause wins), and return the undecided
    flagged variable of highest priority."""
    m = O.shape[1]
    unit_col = O.sum(axis=0) == 1
    cond = O.astype(bool) & unit_col[None, :]
    got = cond.any(axis=1)
    u = u | got
    assign = assign.copy()
    rows = np.nonzero(got)[0]
    if rows.size:
        last_j = (m - 1) - np.argmax(cond[rows, ::-1], axis=1)
        assign[rows] = P[rows, last_j].astype(bool)
    K = np.where(u & ~d, prior, 0)
    return u, assign, _select(K)


def _res(
    O: np.ndarray, P: np.ndarray, c: np.ndarray, i0: int, b: bool
) -> Tuple[np.ndarray, np.ndarray]:
    """Resolve variable i0 (0-based) against its current assignment b: clauses
    satisfied by the literal are removed whole, the falsified occurrences are
    deleted, everything else is untouched."""
    sat_cols = (O[i0] == 1) & (P[i0] == int(b))
    O = O.copy()
    O[:, sat_cols] = 0
    O[i0, :] = 0
    return O, c | sat_cols


def _cc(O: np.ndarray, c: np.ndarray) -> Tuple[bool, bool]:
    empty = ~O.any(axis=0)
    b_c = bool((empty & ~c).any())
    b_s = bool(empty.all())
    return b_s, b_c


def dpll_plain(F: CnfMatrix, prior, assign) -> PlainResult:
    """Run the solver driver on plaintext data.

    ``prior`` is a positive-priority vector (entries >= 1, higher wins) and
    ``assign`` the default branch polarity per row; both length n.  Returns
    the verdict, the released-event trace, and the iteration count T.
    """
    n, m = F.n, F.m
    prior = np.asarray(prior, dtype=np.int64)
    if prior.shape != (n,):
        raise EncodingError("prior length must equal the row count")
    if n and prior.min() < 1:
        raise EncodingError("priorities must be >= 1")
    assign = np.asarray(assign, dtype=bool).copy()
    if assign.shape != (n,):
        raise EncodingError("assign length must equal the row count")

    O = F.O.copy()
    P = F.P.copy()
    u = np.zeros(n, dtype=bool)
    d = np.zeros(n, dtype=bool)
    c = np.zeros(m, dtype=bool)
    trail: List[tuple] = []
    events: List[SearchEvent] = []
    i = 0
    iterations = 0

    while True:
        iterations += 1
        if i != 0:
            O, c = _res(O, P, c, i - 1, bool(assign[i - 1]))
            b_s, b_c = _cc(O, c)
            if b_c:
                events.append(SearchEvent(CONTRADICTION))
                found_first = False
                while trail:
                    O, i, c, d, assign, u, tag = trail.pop()
                    if tag == _FIRST:
                        found_first = True
                        break
                if not found_first:
                    return PlainResult(False, events, iterations)
                assign = assign.copy()
                assign[i - 1] = ~assign[i - 1]
                trail.append((O, i, c, d, assign, u, _SECOND))
                events.append(SearchEvent(BACKTRACK, len(trail)))
                continue
            if b_s:
                events.append(SearchEvent(SUCCESS))
                return PlainResult(True, events, iterations)

        u, assign, ind = _uls(O, P, u, assign, prior, d)
        if ind != 0:
            events.append(SearchEvent(UNIT, ind))
            i = ind
            d = d.copy()
            d[i - 1] = True
        else:
            K = np.where(~d, prior, 0)
            ind2 = _select(K)
            if ind2 == 0:
                raise EncodingError("branch with no undecided variable")
            events.append(SearchEvent(BRANCH, ind2))
            i = ind2
            d = d.copy()
            d[i - 1] = True
            trail.append((O, i, c, d, assign, u, _FIRST))
