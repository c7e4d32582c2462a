"""The two-party solving loop over the shared, permuted formula.

Both parties run this driver in lock-step.  All control flow depends only on
publicly released values (the contradiction/success flags and the permuted
indices), so the loop, the trail, and the emitted event stream are identical
at both ends; formula, strategy, unit flags, and clause-removed flags stay
shared throughout.  Backtracking snapshots the shared-value handles plus the
public decided-flags, and flipping a branch assignment is a local share
operation that costs no communication.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..errors import ProtocolError
from ..events import (
    BACKTRACK,
    BRANCH,
    CONTRADICTION,
    SUCCESS,
    UNIT,
    SearchEvent,
)
from ..gc.builder import bus_to_int
from ..gc.engine import EVALUATOR, SecretRef
from ..shuffle import PartyContext
from .circuits import build_branch, build_cc, build_res, build_uls

_FIRST, _SECOND = 0, 1


@dataclass
class SolverShares:
    """One party's bit shares of the shuffled inputs."""

    O: np.ndarray  # (n, m)
    P: np.ndarray  # (n, m)
    prior: np.ndarray  # (n, PRIOR_BITS) LSB-first
    assign: np.ndarray  # (n,)


@dataclass
class TrailFrame:
    O: SecretRef
    branch_index: int  # 1-based permuted index
    c: Optional[SecretRef]
    d: np.ndarray
    assign: SecretRef
    u: SecretRef
    tag: int


@dataclass
class StepMetrics:
    iterations: int = 0
    circuit_runs: Dict[str, int] = field(default_factory=dict)
    circuit_bytes: Dict[str, int] = field(default_factory=dict)
    elapsed: float = 0.0


@dataclass
class SolveResult:
    sat: bool
    events: List[SearchEvent]
    metrics: StepMetrics


def solve(ctx: PartyContext, shares: SolverShares) -> SolveResult:
    t0 = time.perf_counter()
    params = ctx.params
    n, m = params.n, params.m
    ctx.ch.transcript.set_phase("solve")
    gc = ctx.gc
    suffix = ".a" if gc.role == EVALUATOR else ".b"
    metrics = StepMetrics()

    def run(kind: str, circuit, my_bits=None, carried=None):
        before = ctx.ch.transcript.total_bytes
        result = gc.execute(circuit, my_bits, carried)
        metrics.circuit_runs[kind] = metrics.circuit_runs.get(kind, 0) + 1
        metrics.circuit_bytes[kind] = (
            metrics.circuit_bytes.get(kind, 0)
            + ctx.ch.transcript.total_bytes
            - before
        )
        return result

    d = np.zeros(n, dtype=bool)
    events: List[SearchEvent] = []
    trail: List[TrailFrame] = []
    i = 0
    fresh = True
    o_ref = p_ref = prior_ref = assign_ref = u_ref = None
    c_ref: Optional[SecretRef] = None

    while True:
        metrics.iterations += 1
        if i != 0:
            res = run(
                "res",
                build_res(n, m, i, has_c=c_ref is not None),
                {},
                {
                    "O": o_ref,
                    "P": p_ref,
                    "assign": assign_ref,
                    **({"c": c_ref} if c_ref is not None else {}),
                },
            )
            o_ref = res.shared["O_out"]
            c_ref = res.shared["c_out"]
            cc = run("cc", build_cc(n, m), {}, {"O": o_ref, "c": c_ref})
            b_c = bool(cc.released["b_c"][0])
            b_s = bool(cc.released["b_s"][0])
            if b_c:
                events.append(SearchEvent(CONTRADICTION))
                found_first = False
                while trail:
                    fr = trail.pop()
                    o_ref, i, c_ref, d, assign_ref, u_ref = (
                        fr.O,
                        fr.branch_index,
                        fr.c,
                        fr.d,
                        fr.assign,
                        fr.u,
                    )
                    if fr.tag == _FIRST:
                        found_first = True
                        break
                if not found_first:
                    metrics.elapsed = time.perf_counter() - t0
                    return SolveResult(False, events, metrics)
                assign_ref = gc.flip_bits(assign_ref, [i - 1])
                trail.append(
                    TrailFrame(o_ref, i, c_ref, d, assign_ref, u_ref, _SECOND)
                )
                events.append(SearchEvent(BACKTRACK, len(trail)))
                continue
            if b_s:
                events.append(SearchEvent(SUCCESS))
                metrics.elapsed = time.perf_counter() - t0
                return SolveResult(True, events, metrics)

        if fresh:
            uls = run(
                "uls",
                build_uls(n, m, d, fresh=True),
                {
                    "O_in" + suffix: shares.O.ravel(),
                    "P_in" + suffix: shares.P.ravel(),
                    "prior_in" + suffix: shares.prior.ravel(),
                    "assign_in" + suffix: shares.assign.ravel(),
                },
            )
            o_ref = uls.shared["O"]
            p_ref = uls.shared["P"]
            prior_ref = uls.shared["prior"]
            fresh = False
        else:
            uls = run(
                "uls",
                build_uls(n, m, d, fresh=False),
                {},
                {
                    "O": o_ref,
                    "P": p_ref,
                    "prior": prior_ref,
                    "assign": assign_ref,
                    "u": u_ref,
                },
            )
        u_ref = uls.shared["u_out"]
        assign_ref = uls.shared["assign_out"]
        ind = bus_to_int(uls.released["ind"])
        if ind != 0:
            events.append(SearchEvent(UNIT, ind))
            i = ind
            d = d.copy()
            d[i - 1] = True
        else:
            br = run("branch", build_branch(n, d), {}, {"prior": prior_ref})
            ind2 = bus_to_int(br.released["ind"])
            if ind2 == 0:
                raise ProtocolError("branch released index 0 with undecided variables")
            events.append(SearchEvent(BRANCH, ind2))
            i = ind2
            d = d.copy()
            d[i - 1] = True
            trail.append(TrailFrame(o_ref, i, c_ref, d, assign_ref, u_ref, _FIRST))
