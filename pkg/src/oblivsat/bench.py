"""Benchmark harness: instance generation, sweeps, and metric CSVs.

Reproduces the overhead-study shapes at desk scale: random 3-CNF instances
(or SATLIB files) split half-and-half between the parties, swept over
variable and clause counts, with shuffle/total delay, transcript bytes, and
solver iteration counts per run.  Absolute delays are hardware-bound; the
trends (monotone growth in n and m, shuffle roughly half the total, the
block-packing ratio) are the reproduction target.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cnf import CnfFormula, parse_dimacs, random_3cnf, to_matrix
from .plain import dpll_plain
from .protocol import (
    PartyResult,
    RunMetrics,
    Strategy,
    VerifyJob,
    cnf_common_names,
    run_pair,
    split_clauses,
)
from .transport import ROLE_CONSUMER, ROLE_PROVIDER

METRICS_COLUMNS = [
    "n",
    "m",
    "instance",
    "shuffle_delay_s",
    "total_delay_s",
    "bytes_total",
    "gc_iterations",
    "verdict",
    "plain_dpll_delay_s",
]


def cnf_pair_jobs(
    f: CnfFormula,
    seed: int,
    prf_id: int,
    block_packing: bool = True,
    deterministic: bool = True,
    ot_group: int = 1,
) -> Tuple[VerifyJob, VerifyJob]:
    names = cnf_common_names(f.num_vars)
    fa, fb = split_clauses(f)
    job_a = VerifyJob(
        role=ROLE_CONSUMER,
        formula=fa,
        common_names=names,
        prf_id=prf_id,
        ot_group=ot_group,
        block_packing=block_packing,
        deterministic=deterministic,
        seed=seed,
    )
    job_b = VerifyJob(
        role=ROLE_PROVIDER,
        formula=fb,
        common_names=names,
        prf_id=prf_id,
        ot_group=ot_group,
        block_packing=block_packing,
        deterministic=deterministic,
        seed=seed,
    )
    return job_a, job_b


def run_cnf_instance(
    f: CnfFormula,
    seed: int,
    instance: int = 0,
    prf_id: int = 2,
    block_packing: bool = True,
    with_plain: bool = False,
    ot_group: int = 1,
    timeout: float = 900.0,
) -> Tuple[PartyResult, PartyResult, RunMetrics]:
    job_a, job_b = cnf_pair_jobs(f, seed, prf_id, block_packing, True, ot_group)
    res_a, res_b = run_pair(job_a, job_b, timeout=timeout, instance=instance)
    metrics = res_a.metrics
    if with_plain:
        strat = Strategy.default(f.num_vars)
        matrix = to_matrix(f)
        t0 = time.perf_counter()
        dpll_plain(matrix, strat.prior, strat.assign)
        metrics.plain_dpll_delay_s = time.perf_counter() - t0
    return res_a, res_b, metrics


def load_satlib_dir(path: str) -> List[CnfFormula]:
    out = []
    for name in sorted(os.listdir(path)):
        if name.endswith(".cnf"):
            with open(os.path.join(path, name)) as fh:
                out.append(parse_dimacs(fh.read()))
    return out


def sweep(
    ns: Sequence[int],
    ms: Sequence[int],
    count: int,
    seed: int = 0,
    prf_id: int = 2,
    block_packing: bool = True,
    with_plain: bool = False,
    satlib: Optional[str] = None,
    progress=None,
    instances_out: Optional[List[CnfFormula]] = None,
) -> List[RunMetrics]:
    """Per-cell instances over the (n, m) grid; SATLIB instances, when given,
    replace the generator for the cells their shapes match."""
    rng = np.random.default_rng(seed)
    bank = load_satlib_dir(satlib) if satlib else []
    rows: List[RunMetrics] = []
    for n in ns:
        for m in ms:
            pool = [f for f in bank if f.num_vars == n and f.num_clauses == m]
            for k in range(count):
                f = pool[k] if k < len(pool) else random_3cnf(n, m, rng)
                _, _, metrics = run_cnf_instance(
                    f,
                    seed=seed * 1_000_003 + len(rows),
                    instance=k,
                    prf_id=prf_id,
                    block_packing=block_packing,
                    with_plain=with_plain,
                )
                rows.append(metrics)
                if instances_out is not None:
                    instances_out.append(f)
                if progress:
                    progress(metrics)
    return rows


def rows_to_csv(rows: Iterable[RunMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(METRICS_COLUMNS)
    for r in rows:
        w.writerow(
            [
                r.n,
                r.m,
                r.instance,
                f"{r.shuffle_delay_s:.6f}",
                f"{r.total_delay_s:.6f}",
                r.bytes_total,
                r.gc_iterations,
                r.verdict,
                "" if r.plain_dpll_delay_s is None else f"{r.plain_dpll_delay_s:.6f}",
            ]
        )
    return buf.getvalue()


def summary_csv(rows: Sequence[RunMetrics]) -> str:
    """Per-(n, m) mean/min/max of the headline metrics."""
    cells: Dict[Tuple[int, int], List[RunMetrics]] = {}
    for r in rows:
        cells.setdefault((r.n, r.m), []).append(r)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(
        [
            "n",
            "m",
            "samples",
            "shuffle_mean_s",
            "shuffle_min_s",
            "shuffle_max_s",
            "total_mean_s",
            "total_min_s",
            "total_max_s",
            "bytes_mean",
            "bytes_min",
            "bytes_max",
            "iters_mean",
        ]
    )
    for (n, m), group in sorted(cells.items()):
        sh = [g.shuffle_delay_s for g in group]
        tot = [g.total_delay_s for g in group]
        by = [g.bytes_total for g in group]
        it = [g.gc_iterations for g in group]
        w.writerow(
            [
                n,
                m,
                len(group),
                f"{np.mean(sh):.6f}",
                f"{min(sh):.6f}",
                f"{max(sh):.6f}",
                f"{np.mean(tot):.6f}",
                f"{min(tot):.6f}",
                f"{max(tot):.6f}",
                int(np.mean(by)),
                min(by),
                max(by),
                f"{np.mean(it):.2f}",
            ]
        )
    return buf.getvalue()


def fit_bytes_per_iteration(rows: Sequence[RunMetrics]) -> Tuple[float, float, float]:
    """Least-squares fit of per-iteration bytes against n*m.

    Returns (slope, intercept, r_squared); the complexity-shape check wants
    the product term to explain the traffic.
    """
    x = np.array([r.n * r.m for r in rows], dtype=float)
    y = np.array(
        [r.bytes_total / max(1, r.gc_iterations) for r in rows], dtype=float
    )
    A = np.vstack([x, np.ones_like(x)]).T
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = a * x + b
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot else 1.0
    return float(a), float(b), r2


def shuffle_bytes(result: PartyResult) -> int:
    t = result.transcript
    return t.bytes_in_phase("prepare") + t.bytes_in_phase("shuffle")


def packing_ratio(n: int = 20, m: int = 64, seed: int = 7) -> Tuple[float, int, int]:
    """Shuffle-phase bytes without vs with 128-bit block packing."""
    rng = np.random.default_rng(seed)
    f = random_3cnf(n, m, rng)
    res_packed, _, _ = run_cnf_instance(f, seed=seed, block_packing=True)
    res_plain, _, _ = run_cnf_instance(f, seed=seed, block_packing=False)
    packed = shuffle_bytes(res_packed)
    unpacked = shuffle_bytes(res_plain)
    return unpacked / packed, unpacked, packed
