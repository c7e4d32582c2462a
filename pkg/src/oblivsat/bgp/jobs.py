"""Glue from scenario objects to verification jobs for either party."""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from ..cnf import CnfFormula
from ..protocol import Strategy, VerifyJob
from ..transport import ROLE_CONSUMER, ROLE_PROVIDER
from .encode import encode_agreement, encode_config, origin_index, shared_universe, universe_bit_names
from .model import AbstractTopology, Agreement, RouterConfig, Widths
from .tseytin import bitblast_tseytin


def consumer_inputs(
    topo: AbstractTopology, widths: Widths, agreement: Agreement
) -> Tuple[CnfFormula, List[str], int]:
    universe = shared_universe(topo, widths)
    bits = universe_bit_names(universe)
    model = encode_agreement(topo, agreement, widths)
    formula, n_aux = bitblast_tseytin(model, bits)
    return formula, bits, n_aux


def provider_inputs(
    topo: AbstractTopology, widths: Widths, configs: Dict[str, RouterConfig]
) -> Tuple[CnfFormula, List[str], int]:
    universe = shared_universe(topo, widths)
    bits = universe_bit_names(universe)
    model = encode_config(topo, configs, widths)
    formula, n_aux = bitblast_tseytin(model, bits)
    return formula, bits, n_aux


def provider_strategy(
    topo: AbstractTopology, widths: Widths, configs: Dict[str, RouterConfig]
) -> Strategy:
    """Domain-aware defaults: priorities descend in published order, and the
    default assignment of every shared attribute bit is the value the
    provider's own configuration gives it, so satisfying assignments (when
    they exist) are found near the root of the search."""
    universe = shared_universe(topo, widths)
    assign: List[bool] = []
    for name, width in universe:
        parts = name.split(".")
        cfg = configs.get(parts[1] if parts[0] == "out" else parts[0])
        value = (1 << width) - 1
        if cfg is not None and parts[0] != "out":
            field = parts[1]
            if field == "pfx":
                value = cfg.best.prefix >> (32 - widths.prefix)
            elif field == "lp":
                value = cfg.best.local_pref
            elif field == "org":
                value = origin_index(topo, cfg.best.origin_as)
            elif field.startswith("com"):
                value = 1 if int(field[3:]) in cfg.best.communities else 0
        assign.extend(bool((value >> k) & 1) for k in range(width))
    n_common = len(assign)
    return Strategy(
        prior=np.arange(n_common, 0, -1, dtype=np.int64),
        assign=np.asarray(assign, dtype=bool),
    )


def consumer_job(
    topo: AbstractTopology,
    widths: Widths,
    agreement: Agreement,
    **options,
) -> VerifyJob:
    formula, bits, n_aux = consumer_inputs(topo, widths, agreement)
    return VerifyJob(
        role=ROLE_CONSUMER,
        formula=formula,
        common_names=bits,
        n_aux=n_aux,
        **options,
    )


def provider_job(
    topo: AbstractTopology,
    widths: Widths,
    configs: Dict[str, RouterConfig],
    strategy: Optional[Strategy] = None,
    **options,
) -> VerifyJob:
    formula, bits, n_aux = provider_inputs(topo, widths, configs)
    return VerifyJob(
        role=ROLE_PROVIDER,
        formula=formula,
        common_names=bits,
        n_aux=n_aux,
        strategy=strategy or provider_strategy(topo, widths, configs),
        **options,
    )
