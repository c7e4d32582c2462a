"""End-to-end party runs: handshake, alignment, shuffle, solve, verdict.

The consumer holds the (already negated) agreement formula, the provider the
configuration formula; an UNSAT verdict certifies the agreement is correctly
implemented.  ``run_party`` drives one side over any endpoint; ``run_pair``
runs both over an in-process pipe for tests and benchmarks.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .cnf import CnfFormula, VariableOrder, to_matrix
from .crypto.otp import PRIOR_BITS
from .crypto.prf import PRF_TC16
from .crypto.groups import OT_GROUP_TEST
from .crypto.rng import party_rng, system_rng
from .errors import EncodingError, OblivsatError
from .events import SearchEvent
from .gc.engine import EVALUATOR, GARBLER, GcSession
from .shuffle import (
    PartyContext,
    ShufflePhaseResult,
    consumer_shuffle_phase,
    provider_shuffle_phase,
)
from .solver.driver import SolveResult, SolverShares, solve
from .transport import (
    ROLE_CONSUMER,
    ROLE_PROVIDER,
    Endpoint,
    FrameChannel,
    LocalParams,
    ProtocolTranscript,
    SessionParams,
    common_names_hash,
    handshake,
    pipe_pair,
)

VERDICT_SAT = "SAT"
VERDICT_UNSAT = "UNSAT"


@dataclass
class Strategy:
    """Provider-chosen branching heuristics over the global row order.

    Vectors shorter than n (the provider cannot know the consumer's auxiliary
    count up front) override the leading rows of the default strategy; the
    remaining rows keep descending priorities and all-true assignments.
    """

    prior: np.ndarray  # ints in [1, 2^16)
    assign: np.ndarray  # bools

    @staticmethod
    def default(n: int) -> "Strategy":
        return Strategy(np.arange(n, 0, -1, dtype=np.int64), np.ones(n, dtype=bool))

    def expand(self, n: int) -> "Strategy":
        k = self.prior.shape[0]
        if self.assign.shape[0] != k:
            raise EncodingError("prior and assign lengths differ")
        if k > n:
            raise EncodingError(f"strategy longer ({k}) than the row count ({n})")
        if k == n:
            return self
        full = Strategy.default(n)
        full.prior[:k] = self.prior
        full.assign[:k] = self.assign
        return full

    def validate(self, n: int) -> None:
        if self.prior.shape != (n,) or self.assign.shape != (n,):
            raise EncodingError("strategy vectors must have one entry per row")
        if n and (self.prior.min() < 1 or self.prior.max() >= (1 << PRIOR_BITS)):
            raise EncodingError("priorities must lie in [1, 2^16)")


@dataclass
class VerifyJob:
    """One party's inputs for a verification session."""

    role: str  # transport.ROLE_CONSUMER or ROLE_PROVIDER
    formula: CnfFormula  # local numbering: common variables first, then own aux
    common_names: List[str]
    n_aux: int = 0
    strategy: Optional[Strategy] = None  # provider only
    prf_id: int = PRF_TC16
    ot_group: int = OT_GROUP_TEST
    block_packing: bool = True
    deterministic: bool = False
    seed: int = 0
    force_identity_perms: bool = False  # test hook
    keep_payloads: bool = False


@dataclass
class RunMetrics:
    n: int
    m: int
    instance: int
    shuffle_delay_s: float
    total_delay_s: float
    bytes_total: int
    gc_iterations: int
    verdict: str
    plain_dpll_delay_s: Optional[float] = None


@dataclass
class PartyResult:
    role: str
    verdict: str
    sat: bool
    events: List[SearchEvent]
    metrics: RunMetrics
    transcript: ProtocolTranscript
    params: SessionParams
    solve_result: SolveResult
    debug: dict = field(default_factory=dict)


def run_party(endpoint: Endpoint, job: VerifyJob, instance: int = 0) -> PartyResult:
    t_start = time.perf_counter()
    if job.role not in (ROLE_CONSUMER, ROLE_PROVIDER):
        raise EncodingError(f"unknown role {job.role!r}")
    n_common = len(job.common_names)
    if job.formula.num_vars != n_common + job.n_aux:
        raise EncodingError(
            "formula variable count must equal common + own auxiliary count"
        )
    transcript = ProtocolTranscript(keep_payloads=job.keep_payloads or job.deterministic)
    ch = FrameChannel(endpoint, transcript)
    local = LocalParams(
        role=job.role,
        n_common=n_common,
        n_aux=job.n_aux,
        m=job.formula.num_clauses,
        prf_id=job.prf_id,
        ot_group=job.ot_group,
        block_packing=job.block_packing,
        deterministic=job.deterministic,
        seed=job.seed,
        common_hash=common_names_hash(job.common_names),
    )
    try:
        params = handshake(ch, local)
        side = "A" if job.role == ROLE_CONSUMER else "B"
        order = VariableOrder(job.common_names, params.n_aux_a, params.n_aux_b)
        matrix = to_matrix(job.formula, order, side=side)
        rng = (
            party_rng(job.seed, job.role) if job.deterministic else system_rng()
        )
        transcript.set_phase("setup")
        gc = GcSession(
            ch,
            EVALUATOR if side == "A" else GARBLER,
            rng,
            params.ot_group,
        )
        ctx = PartyContext(ch=ch, params=params, rng=rng, gc=gc)

        strategy = None
        if side == "A":
            shuffled = consumer_shuffle_phase(
                ctx, matrix.O, matrix.P, job.force_identity_perms
            )
        else:
            strategy = (job.strategy or Strategy.default(params.n)).expand(params.n)
            strategy.validate(params.n)
            shuffled = provider_shuffle_phase(
                ctx,
                matrix.O,
                matrix.P,
                strategy.prior.astype(np.uint64),
                strategy.assign.astype(np.uint8),
                job.force_identity_perms,
            )

        shares = SolverShares(
            O=shuffled.shares.O,
            P=shuffled.shares.P,
            prior=shuffled.shares.prior,
            assign=shuffled.shares.assign,
        )
        result = solve(ctx, shares)

        verdict = VERDICT_SAT if result.sat else VERDICT_UNSAT
        metrics = RunMetrics(
            n=params.n,
            m=params.m,
            instance=instance,
            shuffle_delay_s=shuffled.elapsed,
            total_delay_s=time.perf_counter() - t_start,
            bytes_total=transcript.total_bytes,
            gc_iterations=result.metrics.iterations,
            verdict=verdict,
        )
        debug = {}
        if job.deterministic:
            debug = {
                "order": order,
                "matrix": matrix,
                "share_blocks": shuffled.share.blocks,
                "perm": shuffled.share.perm,
                "solver_shares": shares,
                "prepare": shuffled.prepare_debug,
            }
            if side == "B":
                debug["strategy"] = strategy
        return PartyResult(
            role=job.role,
            verdict=verdict,
            sat=result.sat,
            events=result.events,
            metrics=metrics,
            transcript=transcript,
            params=params,
            solve_result=result,
            debug=debug,
        )
    except OblivsatError:
        ch.abort("protocol failure")
        raise
    except Exception:
        ch.abort("internal error")
        raise


def run_pair(
    job_a: VerifyJob, job_b: VerifyJob, timeout: float = 600.0, instance: int = 0
) -> Tuple[PartyResult, PartyResult]:
    """Run both parties over an in-process duplex pipe (one thread each)."""
    end_a, end_b = pipe_pair(timeout)
    results: dict = {}
    errors: dict = {}

    def runner(name, endpoint, job):
        try:
            results[name] = run_party(endpoint, job, instance)
        except BaseException as e:  # noqa: BLE001 - reported to the caller below
            errors[name] = e
            endpoint.close()

    ta = threading.Thread(target=runner, args=("A", end_a, job_a), daemon=True)
    tb = threading.Thread(target=runner, args=("B", end_b, job_b), daemon=True)
    ta.start()
    tb.start()
    ta.join(timeout)
    tb.join(timeout)
    if ta.is_alive() or tb.is_alive():
        end_a.close()
        end_b.close()
        raise TimeoutError("two-party run did not finish in time")
    for name in ("A", "B"):
        if name in errors:
            raise errors[name]
    return results["A"], results["B"]


def cnf_common_names(num_vars: int) -> List[str]:
    return [f"x{i}" for i in range(1, num_vars + 1)]


def split_clauses(f: CnfFormula) -> Tuple[CnfFormula, CnfFormula]:
    """Benchmark split: first ceil(m/2) clauses to the consumer, rest to the
    provider, every variable treated as common."""
    half = -(-f.num_clauses // 2)
    return (
        CnfFormula(f.num_vars, [list(c) for c in f.clauses[:half]]),
        CnfFormula(f.num_vars, [list(c) for c in f.clauses[half:]]),
    )
