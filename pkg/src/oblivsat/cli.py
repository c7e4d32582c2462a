"""Command-line entry points.

``oblivsat-party`` runs one side of a verification session over TCP, from
either a DIMACS file (this party's half of a split formula) or a BGP
scenario file (provider: topology + configurations, consumer: topology +
agreement).  ``oblivsat-bench`` sweeps the desk-scale overhead study over an
in-process channel and writes metric CSVs.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

import numpy as np

from .bench import rows_to_csv, summary_csv, sweep
from .bgp.jobs import consumer_job, provider_job, provider_strategy
from .bgp.scenario import parse_scenario
from .cnf import parse_dimacs
from .crypto.groups import OT_GROUP_RELEASE, OT_GROUP_TEST
from .crypto.prf import PRF_AES128, PRF_TC16
from .errors import OblivsatError
from .events import format_trace
from .protocol import (
    RunMetrics,
    Strategy,
    VerifyJob,
    cnf_common_names,
    run_party,
)
from .transport import ROLE_CONSUMER, ROLE_PROVIDER, tcp_connect, tcp_listen

_PRF_IDS = {"aes128": PRF_AES128, "tc16": PRF_TC16}
_OT_GROUPS = {"test": OT_GROUP_TEST, "release": OT_GROUP_RELEASE}


def _host_port(text: str):
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}")
    return host, int(port)


def _parse_strategy_file(path: str) -> Strategy:
    prior: Optional[List[int]] = None
    assign: Optional[List[int]] = None
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *vals = line.split()
            if head == "prior":
                prior = [int(v) for v in vals]
            elif head == "assign":
                assign = [int(v) for v in vals]
            else:
                raise OblivsatError(f"strategy file: unknown line {head!r}")
    if prior is None or assign is None:
        raise OblivsatError("strategy file needs both 'prior' and 'assign' lines")
    return Strategy(np.asarray(prior, dtype=np.int64), np.asarray(assign, dtype=bool))


def party_main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="oblivsat-party",
        description="Run one party of a privacy-preserving SAT verification session.",
    )
    p.add_argument("--role", required=True, choices=["consumer", "provider"])
    conn = p.add_mutually_exclusive_group(required=True)
    conn.add_argument("--listen", type=_host_port, metavar="HOST:PORT")
    conn.add_argument("--connect", type=_host_port, metavar="HOST:PORT")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--cnf", metavar="PATH", help="this party's half-formula (DIMACS)")
    src.add_argument("--scenario", metavar="PATH", help="BGP scenario file")
    p.add_argument("--strategy-file", metavar="PATH")
    p.add_argument("--metrics-out", metavar="PATH")
    p.add_argument("--trace-out", metavar="PATH", help="released search-event trace")
    p.add_argument("--transcript-out", metavar="PATH", help="frame-level transcript CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--prf", choices=sorted(_PRF_IDS), default="aes128")
    p.add_argument("--ot-group", choices=sorted(_OT_GROUPS), default="release")
    p.add_argument("--no-block-packing", action="store_true")
    p.add_argument("--timeout", type=float, default=600.0)
    args = p.parse_args(argv)

    role = ROLE_CONSUMER if args.role == "consumer" else ROLE_PROVIDER
    options = dict(
        prf_id=_PRF_IDS[args.prf],
        ot_group=_OT_GROUPS[args.ot_group],
        block_packing=not args.no_block_packing,
        deterministic=args.deterministic,
        seed=args.seed,
    )
    try:
        if args.cnf:
            with open(args.cnf) as fh:
                formula = parse_dimacs(fh.read())
            job = VerifyJob(
                role=role,
                formula=formula,
                common_names=cnf_common_names(formula.num_vars),
                strategy=(
                    _parse_strategy_file(args.strategy_file)
                    if args.strategy_file and role == ROLE_PROVIDER
                    else None
                ),
                **options,
            )
        else:
            with open(args.scenario) as fh:
                scenario = parse_scenario(fh.read())
            if role == ROLE_CONSUMER:
                if len(scenario.agreements) != 1:
                    raise OblivsatError(
                        "consumer scenario must declare exactly one agreement "
                        f"(found {len(scenario.agreements)})"
                    )
                if scenario.configs:
                    raise OblivsatError(
                        "consumer scenario must not carry provider configurations"
                    )
                job = consumer_job(
                    scenario.topology, scenario.widths, scenario.agreements[0], **options
                )
            else:
                if scenario.agreements:
                    raise OblivsatError(
                        "provider scenario must not carry an agreement"
                    )
                if not scenario.configs:
                    raise OblivsatError("provider scenario declares no configurations")
                strategy = (
                    _parse_strategy_file(args.strategy_file)
                    if args.strategy_file
                    else provider_strategy(
                        scenario.topology, scenario.widths, scenario.configs
                    )
                )
                job = provider_job(
                    scenario.topology,
                    scenario.widths,
                    scenario.configs,
                    strategy=strategy,
                    **options,
                )
    except (OSError, OblivsatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    try:
        if args.listen:
            endpoint = tcp_listen(*args.listen, timeout=args.timeout)
        else:
            endpoint = tcp_connect(*args.connect, timeout=args.timeout)
        result = run_party(endpoint, job)
    except OblivsatError as e:
        print(f"protocol failure: {e}", file=sys.stderr)
        return 3

    print(f"verdict: {result.verdict}")
    if args.scenario:
        print(
            "agreement correctly implemented"
            if result.verdict == "UNSAT"
            else "agreement NOT correctly implemented (counterexample exists)"
        )
    m = result.metrics
    print(
        f"n={m.n} m={m.m} iterations={m.gc_iterations} "
        f"shuffle={m.shuffle_delay_s:.3f}s total={m.total_delay_s:.3f}s "
        f"bytes={m.bytes_total}"
    )
    if args.metrics_out:
        with open(args.metrics_out, "w") as fh:
            fh.write(rows_to_csv([m]))
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            fh.write(format_trace(result.events))
    if args.transcript_out:
        with open(args.transcript_out, "w") as fh:
            fh.write(result.transcript.to_csv())
    return 0


def _int_range(text: str) -> List[int]:
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(x) for x in text.split(",") if x]


def bench_main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="oblivsat-bench",
        description="Two-party overhead sweep over an in-process channel.",
    )
    p.add_argument(
        "--bench",
        nargs=3,
        metavar=("N_RANGE", "M_RANGE", "COUNT"),
        default=["5,10,15,20", "10,20,30,40", "5"],
        help="ranges as comma lists or start:stop[:step]",
    )
    p.add_argument("--satlib", metavar="DIR", help="directory of DIMACS instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prf", choices=sorted(_PRF_IDS), default="tc16")
    p.add_argument("--no-block-packing", action="store_true")
    p.add_argument("--with-plain", action="store_true", help="co-run the plaintext solver")
    p.add_argument("--metrics-out", metavar="PATH", default="bench_metrics.csv")
    p.add_argument("--summary-out", metavar="PATH", default="bench_summary.csv")
    args = p.parse_args(argv)

    ns = _int_range(args.bench[0])
    ms = _int_range(args.bench[1])
    count = int(args.bench[2])

    def progress(row: RunMetrics) -> None:
        print(
            f"n={row.n:3d} m={row.m:3d} #{row.instance} {row.verdict:5s} "
            f"iters={row.gc_iterations:4d} shuffle={row.shuffle_delay_s:.2f}s "
            f"total={row.total_delay_s:.2f}s bytes={row.bytes_total}"
        )

    try:
        rows = sweep(
            ns,
            ms,
            count,
            seed=args.seed,
            prf_id=_PRF_IDS[args.prf],
            block_packing=not args.no_block_packing,
            with_plain=args.with_plain,
            satlib=args.satlib,
            progress=progress,
        )
    except (OSError, OblivsatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    with open(args.metrics_out, "w") as fh:
        fh.write(rows_to_csv(rows))
    with open(args.summary_out, "w") as fh:
        fh.write(summary_csv(rows))
    print(f"wrote {args.metrics_out} and {args.summary_out} ({len(rows)} runs)")
    return 0


if __name__ == "__main__":
    sys.exit(party_main())
