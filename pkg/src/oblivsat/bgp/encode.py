"""Compile configurations and agreements to boolean models.

Both parties derive the shared variable universe from the published topology
alone, in one canonical order, so their row indices agree without seeing each
other's constraints.  Origins are encoded as indices into the topology's AS
universe, which keeps the symbolic route state small; AS ids stay full-width
16-bit values everywhere outside the SAT encoding.

The agreement side returns the *negation* of the property, so that
unsatisfiability of (config and negated agreement) certifies a correct
implementation.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from ..errors import ScenarioError
from .model import (
    PREFER_AVOID_AS,
    SELECTIVE_EXPORT,
    SET_LOCAL_PREF,
    LOCAL_PREF_BITS,
    AbstractTopology,
    Agreement,
    BitVar,
    BooleanModel,
    Expr,
    ExportRule,
    FALSE,
    RouterConfig,
    TRUE,
    Widths,
    all_of,
    any_of,
    eq_const,
    ite,
    neg,
)


def origin_width(topo: AbstractTopology) -> int:
    return max(1, math.ceil(math.log2(max(2, len(topo.as_universe())))))


def origin_index(topo: AbstractTopology, asn: int) -> int:
    uni = topo.as_universe()
    if asn not in uni:
        raise ScenarioError(f"unknown AS id {asn}")
    return uni.index(asn)


def shared_universe(topo: AbstractTopology, widths: Widths) -> List[Tuple[str, int]]:
    """The provider-published variable translation list, in canonical order:
    per provider router its route attributes, then all export-valid bits."""
    out: List[Tuple[str, int]] = []
    ow = origin_width(topo)
    for r in topo.provider_routers():
        out.append((f"{r.rid}.pfx", widths.prefix))
        out.append((f"{r.rid}.lp", LOCAL_PREF_BITS))
        out.append((f"{r.rid}.org", ow))
        for tag in sorted(topo.tags):
            out.append((f"{r.rid}.com{tag}", 1))
    for r in topo.provider_routers():
        for x in topo.external_neighbors(r.rid):
            out.append((f"out.{r.rid}.{x.rid}", 1))
    return out


def universe_bit_names(universe: Sequence[Tuple[str, int]]) -> List[str]:
    return [f"{v}[{k}]" for v, w in universe for k in range(w)]


def _model_prefix(widths: Widths, prefix: int, prefix_len: int) -> Tuple[int, int]:
    """Map a 32-bit prefix/len onto the model's prefix width."""
    w = widths.prefix
    return prefix >> (32 - w), min(prefix_len, w)


def _fbm(widths: Widths, rid: str, prefix: int, prefix_len: int) -> Expr:
    value, eff = _model_prefix(widths, prefix, prefix_len)
    return eq_const(f"{rid}.pfx", widths.prefix, value, top_bits=eff)


def _rule_applies(rule: ExportRule, neighbor) -> bool:
    if rule.neighbor is not None:
        return rule.neighbor == neighbor.rid
    if rule.neighbor_as is not None:
        return rule.neighbor_as == neighbor.asn
    return True


def _rule_match(topo: AbstractTopology, widths: Widths, rid: str, rule: ExportRule) -> Expr:
    terms = []
    if rule.prefix is not None:
        terms.append(_fbm(widths, rid, rule.prefix, rule.prefix_len or 0))
    if rule.community is not None:
        if rule.community not in topo.tags:
            raise ScenarioError(f"community tag {rule.community} not in the topology universe")
        terms.append(BitVar(f"{rid}.com{rule.community}[0]"))
    return all_of(terms)


def encode_config(
    topo: AbstractTopology, configs: Dict[str, RouterConfig], widths: Widths
) -> BooleanModel:
    """Constrain route attributes to the configured best route and each
    export-valid bit to its first-match rule chain."""
    provider = topo.provider_routers()
    missing = [r.rid for r in provider if r.rid not in configs]
    if missing:
        raise ScenarioError(f"no configuration for provider router(s) {missing}")
    ow = origin_width(topo)
    parts: List[Expr] = []
    for r in provider:
        cfg = configs[r.rid]
        best = cfg.best
        parts.append(eq_const(f"{r.rid}.lp", LOCAL_PREF_BITS, best.local_pref))
        parts.append(eq_const(f"{r.rid}.org", ow, origin_index(topo, best.origin_as)))
        for tag in sorted(topo.tags):
            bit = BitVar(f"{r.rid}.com{tag}[0]")
            parts.append(bit if tag in best.communities else neg(bit))
        neighbor_ids = {x.rid for x in topo.neighbors(r.rid)}
        for rule in cfg.rules:
            if rule.neighbor is not None and rule.neighbor not in neighbor_ids:
                raise ScenarioError(
                    f"rule on {r.rid} references unknown neighbor {rule.neighbor}"
                )
        for x in topo.external_neighbors(r.rid):
            chain: Expr = TRUE if cfg.default_export else FALSE
            for rule in reversed(cfg.rules):
                if not _rule_applies(rule, x):
                    continue
                chain = ite(
                    _rule_match(topo, widths, r.rid, rule),
                    TRUE if rule.allow else FALSE,
                    chain,
                )
            out = BitVar(f"out.{r.rid}.{x.rid}[0]")
            parts.append(all_of([any_of([neg(out), chain]), any_of([out, neg(chain)])]))
    uni = shared_universe(topo, widths)
    return BooleanModel(dict(uni), all_of(parts))


def _qualifying_pairs(topo: AbstractTopology, a: Agreement):
    pairs = []
    for r in topo.provider_routers():
        for x in topo.external_neighbors(r.rid):
            if a.target_as is not None and x.asn == a.target_as:
                pairs.append((r, x))
            elif a.neighbors is not None and x.rid in a.neighbors:
                pairs.append((r, x))
    return pairs


def _as_set(topo: AbstractTopology, a: Agreement) -> List[int]:
    if a.target_as is not None:
        return [a.target_as]
    return sorted({topo.router(rid).asn for rid in (a.neighbors or ())})


def encode_agreement(
    topo: AbstractTopology, a: Agreement, widths: Widths
) -> BooleanModel:
    """Return the negated property: satisfiable together with the config
    exactly when the agreement is implemented incorrectly."""
    if a.target_as is not None and a.target_as not in topo.as_universe():
        raise ScenarioError(f"unknown AS id {a.target_as}")
    for rid in a.neighbors or ():
        topo.router(rid)
    ow = origin_width(topo)
    provider = topo.provider_routers()
    if a.kind == SELECTIVE_EXPORT:
        witnesses = [
            all_of(
                [
                    _fbm(widths, r.rid, a.prefix, a.prefix_len),
                    BitVar(f"out.{r.rid}.{x.rid}[0]"),
                ]
            )
            for r, x in _qualifying_pairs(topo, a)
        ]
        negated = any_of(witnesses)
    elif a.kind == SET_LOCAL_PREF:
        negated = any_of(
            [
                all_of(
                    [
                        _fbm(widths, r.rid, a.prefix, a.prefix_len),
                        neg(eq_const(f"{r.rid}.lp", LOCAL_PREF_BITS, a.local_pref)),
                    ]
                )
                for r in provider
            ]
        )
    else:  # PREFER_AVOID_AS
        members = _as_set(topo, a)
        witnesses = []
        for r in provider:
            member = any_of(
                [eq_const(f"{r.rid}.org", ow, origin_index(topo, asn)) for asn in members]
            )
            bad = member if not a.prefer else neg(member)
            witnesses.append(all_of([_fbm(widths, r.rid, a.prefix, a.prefix_len), bad]))
        negated = any_of(witnesses)
    uni = shared_universe(topo, widths)
    return BooleanModel(dict(uni), negated)
