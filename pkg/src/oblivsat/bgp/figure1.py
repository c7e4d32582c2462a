"""The six-AS evaluation topology and its agreement/configuration matrix.

The provider (AS 2) runs two border routers meshed together; the consumer
(AS 1) announces 172.217.8.0/24.  Five representative agreements are each
paired with three correct provider configurations and one deliberately
broken one, giving the 15 expected-UNSAT and 5 expected-SAT functionality
runs.  Prefixes are modelled at 8 bits for desk-scale solving.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, List

from .model import (
    PREFER_AVOID_AS,
    SELECTIVE_EXPORT,
    SET_LOCAL_PREF,
    AbstractTopology,
    Agreement,
    BestRoute,
    ExportRule,
    Router,
    RouterConfig,
    Widths,
)
from .scenario import parse_ip

PREFIX = parse_ip("172.217.8.0")
PREFIX_LEN = 24
OTHER_PREFIX = parse_ip("10.0.0.0")

AS_A, AS_B, AS_C, AS_D, AS_E, AS_F = 1, 2, 3, 4, 5, 6


def topology() -> AbstractTopology:
    routers = [
        Router("R1", AS_A, parse_ip("10.1.0.1")),
        Router("R2a", AS_B, parse_ip("10.2.0.1")),
        Router("R2b", AS_B, parse_ip("10.2.0.2")),
        Router("R3", AS_C, parse_ip("10.3.0.1")),
        Router("R4", AS_D, parse_ip("10.4.0.1")),
        Router("R5", AS_E, parse_ip("65.124.208.93")),
        Router("R6", AS_F, parse_ip("10.6.0.1")),
    ]
    links = [
        ("R2a", "R2b"),
        ("R2a", "R1"),
        ("R2a", "R3"),
        ("R2a", "R5"),
        ("R2b", "R4"),
        ("R2b", "R6"),
    ]
    return AbstractTopology(routers, links, provider_as=AS_B, tags=[30])


def widths() -> Widths:
    return Widths(prefix=8)


def agreements() -> List[Agreement]:
    return [
        Agreement(SELECTIVE_EXPORT, PREFIX, PREFIX_LEN, target_as=AS_E),
        Agreement(SELECTIVE_EXPORT, PREFIX, PREFIX_LEN, neighbors=("R3",)),
        Agreement(SET_LOCAL_PREF, PREFIX, PREFIX_LEN, local_pref=120),
        Agreement(PREFER_AVOID_AS, PREFIX, PREFIX_LEN, target_as=AS_D, prefer=False),
        Agreement(PREFER_AVOID_AS, PREFIX, PREFIX_LEN, target_as=AS_A, prefer=True),
    ]


def _base_best(communities=frozenset({30})) -> BestRoute:
    return BestRoute(
        prefix=PREFIX,
        prefix_len=PREFIX_LEN,
        origin_as=AS_A,
        local_pref=120,
        communities=communities,
    )


def correct_configs(variant: int) -> Dict[str, RouterConfig]:
    """Three correct implementations: plain per-neighbor denies, AS-selector
    denies behind an unrelated first rule, and community-scoped denies."""
    best = _base_best()
    if variant == 0:
        r2a = RouterConfig(
            "R2a",
            best,
            [
                ExportRule(allow=False, neighbor="R5", prefix=PREFIX, prefix_len=PREFIX_LEN),
                ExportRule(allow=False, neighbor="R3", prefix=PREFIX, prefix_len=PREFIX_LEN),
            ],
        )
        r2b = RouterConfig("R2b", best, [])
    elif variant == 1:
        r2a = RouterConfig(
            "R2a",
            best,
            [
                ExportRule(allow=True, neighbor="R5", prefix=OTHER_PREFIX, prefix_len=8),
                ExportRule(allow=False, neighbor_as=AS_E, prefix=PREFIX, prefix_len=PREFIX_LEN),
                ExportRule(allow=False, neighbor_as=AS_C, prefix=PREFIX, prefix_len=PREFIX_LEN),
            ],
        )
        r2b = RouterConfig(
            "R2b",
            best,
            [ExportRule(allow=False, neighbor="R4", prefix=OTHER_PREFIX, prefix_len=8)],
        )
    elif variant == 2:
        r2a = RouterConfig(
            "R2a",
            best,
            [
                ExportRule(
                    allow=False, neighbor="R5", prefix=PREFIX, prefix_len=PREFIX_LEN, community=30
                ),
                ExportRule(
                    allow=False, neighbor="R3", prefix=PREFIX, prefix_len=PREFIX_LEN, community=30
                ),
            ],
        )
        r2b = RouterConfig("R2b", best, [], default_export=False)
    else:
        raise ValueError("variant must be 0, 1 or 2")
    return {"R2a": r2a, "R2b": r2b}


def mutated_configs(agreement_index: int) -> Dict[str, RouterConfig]:
    """One broken implementation per agreement, derived from variant 0."""
    cfgs = correct_configs(0)
    r2a, r2b = cfgs["R2a"], cfgs["R2b"]
    if agreement_index == 0:  # forgot the deny towards AS E
        r2a = RouterConfig("R2a", r2a.best, [r2a.rules[1]])
    elif agreement_index == 1:  # forgot the deny towards R3
        r2a = RouterConfig("R2a", r2a.best, [r2a.rules[0]])
    elif agreement_index == 2:  # wrong local preference
        r2a = RouterConfig("R2a", replace(r2a.best, local_pref=100), r2a.rules)
        r2b = RouterConfig("R2b", replace(r2b.best, local_pref=100), [])
    elif agreement_index == 3:  # best route now goes through the avoided AS
        r2a = RouterConfig("R2a", replace(r2a.best, origin_as=AS_D), r2a.rules)
    elif agreement_index == 4:  # best route no longer via the preferred AS
        r2b = RouterConfig("R2b", replace(r2b.best, origin_as=AS_C), [])
    else:
        raise ValueError("agreement index must be 0..4")
    return {"R2a": r2a, "R2b": r2b}


@dataclass(frozen=True)
class FunctionalityCase:
    agreement_index: int
    variant: str  # "v0" | "v1" | "v2" | "mutated"
    agreement: Agreement
    configs: Dict[str, RouterConfig]
    expect_sat: bool


def functionality_cases() -> List[FunctionalityCase]:
    """The 20 functionality-check runs: 15 correct (UNSAT), 5 mutated (SAT)."""
    cases = []
    ags = agreements()
    for ai, ag in enumerate(ags):
        for v in range(3):
            cases.append(
                FunctionalityCase(ai, f"v{v}", ag, correct_configs(v), expect_sat=False)
            )
    for ai, ag in enumerate(ags):
        cases.append(
            FunctionalityCase(ai, "mutated", ag, mutated_configs(ai), expect_sat=True)
        )
    return cases
