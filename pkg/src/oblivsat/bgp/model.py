"""Abstract BGP domain objects and the boolean models they compile to.

The provider's published abstraction is the topology: routers with AS ids
and addresses, the provider's router mesh plus its peerings, and the
community-tag universe.  Route state is modelled per provider router as a
single symbolic best route (prefix, local preference, origin) plus one
presence bit per known community tag, together with one export-valid bit
per (provider router, external neighbor) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from ..errors import ScenarioError

SELECTIVE_EXPORT = "selective-export"
SET_LOCAL_PREF = "set-local-pref"
PREFER_AVOID_AS = "prefer-avoid-as"

AS_BITS = 16
LOCAL_PREF_BITS = 8
COMMUNITY_BITS = 32
PREFIX_BITS_MAX = 32


@dataclass(frozen=True)
class Router:
    rid: str
    asn: int
    ip: int

    def __post_init__(self):
        if not 0 <= self.asn < (1 << AS_BITS):
            raise ScenarioError(f"AS id {self.asn} outside 16-bit range")
        if not 0 <= self.ip < (1 << 32):
            raise ScenarioError(f"router {self.rid}: bad IP value")


@dataclass
class AbstractTopology:
    routers: List[Router]
    links: List[Tuple[str, str]]
    provider_as: int
    tags: List[int] = field(default_factory=list)

    def __post_init__(self):
        ids = {r.rid for r in self.routers}
        if len(ids) != len(self.routers):
            raise ScenarioError("duplicate router id")
        for a, b in self.links:
            if a not in ids or b not in ids:
                raise ScenarioError(f"link endpoint {a if a not in ids else b} unknown")
        for t in self.tags:
            if not 0 <= t < (1 << COMMUNITY_BITS):
                raise ScenarioError(f"community tag {t} outside 32-bit range")

    def router(self, rid: str) -> Router:
        for r in self.routers:
            if r.rid == rid:
                return r
        raise ScenarioError(f"unknown router {rid}")

    def provider_routers(self) -> List[Router]:
        return sorted(
            (r for r in self.routers if r.asn == self.provider_as),
            key=lambda r: r.rid,
        )

    def neighbors(self, rid: str) -> List[Router]:
        out = []
        for a, b in self.links:
            if a == rid:
                out.append(self.router(b))
            elif b == rid:
                out.append(self.router(a))
        return sorted(out, key=lambda r: r.rid)

    def external_neighbors(self, rid: str) -> List[Router]:
        return [r for r in self.neighbors(rid) if r.asn != self.provider_as]

    def as_universe(self) -> List[int]:
        return sorted({r.asn for r in self.routers})


@dataclass(frozen=True)
class BestRoute:
    prefix: int
    prefix_len: int
    origin_as: int
    local_pref: int
    communities: FrozenSet[int] = frozenset()

    def __post_init__(self):
        if not 0 <= self.prefix_len <= PREFIX_BITS_MAX:
            raise ScenarioError(f"prefix length {self.prefix_len} outside [0, 32]")
        if not 0 <= self.local_pref < (1 << LOCAL_PREF_BITS):
            raise ScenarioError("local-pref outside 8-bit range")


@dataclass(frozen=True)
class ExportRule:
    """First-match export rule scoped to a neighbor (by id or by AS)."""

    allow: bool
    neighbor: Optional[str] = None
    neighbor_as: Optional[int] = None
    prefix: Optional[int] = None
    prefix_len: Optional[int] = None
    community: Optional[int] = None


@dataclass
class RouterConfig:
    rid: str
    best: BestRoute
    rules: List[ExportRule] = field(default_factory=list)
    default_export: bool = True


@dataclass(frozen=True)
class Agreement:
    kind: str
    prefix: int
    prefix_len: int
    target_as: Optional[int] = None
    neighbors: Optional[Tuple[str, ...]] = None
    local_pref: Optional[int] = None
    prefer: bool = False

    def __post_init__(self):
        if self.kind not in (SELECTIVE_EXPORT, SET_LOCAL_PREF, PREFER_AVOID_AS):
            raise ScenarioError(f"unknown agreement kind {self.kind!r}")
        if self.kind == SET_LOCAL_PREF and self.local_pref is None:
            raise ScenarioError("set-local-pref needs a value")
        if self.kind != SET_LOCAL_PREF and self.target_as is None and self.neighbors is None:
            raise ScenarioError(f"{self.kind} needs a target AS or neighbor set")


@dataclass(frozen=True)
class Widths:
    prefix: int = PREFIX_BITS_MAX

    def __post_init__(self):
        if not 1 <= self.prefix <= PREFIX_BITS_MAX:
            raise ScenarioError("prefix width must lie in [1, 32]")


# ---- boolean-model expressions ---------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class BitVar(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    value: bool


@dataclass(frozen=True)
class Not(Expr):
    x: Expr


@dataclass(frozen=True)
class And(Expr):
    xs: Tuple[Expr, ...]


@dataclass(frozen=True)
class Or(Expr):
    xs: Tuple[Expr, ...]


TRUE = Const(True)
FALSE = Const(False)


def all_of(xs: Sequence[Expr]) -> Expr:
    flat: List[Expr] = []
    for x in xs:
        if isinstance(x, And):
            flat.extend(x.xs)
        elif x == FALSE:
            return FALSE
        elif x != TRUE:
            flat.append(x)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def any_of(xs: Sequence[Expr]) -> Expr:
    flat: List[Expr] = []
    for x in xs:
        if isinstance(x, Or):
            flat.extend(x.xs)
        elif x == TRUE:
            return TRUE
        elif x != FALSE:
            flat.append(x)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def neg(x: Expr) -> Expr:
    if isinstance(x, Const):
        return Const(not x.value)
    if isinstance(x, Not):
        return x.x
    return Not(x)


def implies(a: Expr, b: Expr) -> Expr:
    return any_of([neg(a), b])


def ite(c: Expr, t: Expr, e: Expr) -> Expr:
    if isinstance(c, Const):
        return t if c.value else e
    if t == TRUE:
        return any_of([c, e])
    if t == FALSE:
        return all_of([neg(c), e])
    if e == TRUE:
        return any_of([neg(c), t])
    if e == FALSE:
        return all_of([c, t])
    return any_of([all_of([c, t]), all_of([neg(c), e])])


@dataclass
class BooleanModel:
    """Bit-level constraint over declared variables.

    ``variables`` maps a vector name to its width; expressions reference the
    individual bits as "name[k]" with k LSB-first.
    """

    variables: Dict[str, int]
    constraint: Expr

    def bit_names(self) -> List[str]:
        return [f"{v}[{k}]" for v, w in self.variables.items() for k in range(w)]


def var_bits(name: str, width: int) -> List[Expr]:
    return [BitVar(f"{name}[{k}]") for k in range(width)]


def eq_const(name: str, width: int, value: int, top_bits: Optional[int] = None) -> Expr:
    """Equality of a bit vector against a constant; with top_bits, only the
    that many most-significant bits are compared (longest-prefix match)."""
    lo = 0 if top_bits is None else max(0, width - top_bits)
    terms = []
    for k in range(lo, width):
        bit = BitVar(f"{name}[{k}]")
        terms.append(bit if (value >> k) & 1 else neg(bit))
    return all_of(terms)


def eval_expr(x: Expr, env: Dict[str, bool]) -> bool:
    if isinstance(x, Const):
        return x.value
    if isinstance(x, BitVar):
        return env[x.name]
    if isinstance(x, Not):
        return not eval_expr(x.x, env)
    if isinstance(x, And):
        return all(eval_expr(c, env) for c in x.xs)
    if isinstance(x, Or):
        return any(eval_expr(c, env) for c in x.xs)
    raise TypeError(f"unknown expr {x!r}")
