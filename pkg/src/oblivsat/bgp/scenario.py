"""Line-oriented scenario files: one declaration per line, '#' comments.

Grammar (all AS ids and tags are decimal, prefixes dotted-quad/len):

  param prefix_bits <1..32>
  provider-as <asn>
  router <id> as <asn> ip <dotted-quad>
  link <id> <id>
  tag <value>
  config <router> route prefix <p>/<len> origin <asn> local-pref <v> [communities <t1,t2,...>]
  config <router> (neighbor <id> | neighbor-as <asn>) (allow|deny) (any | [prefix <p>/<len>] [community <t>])
  config <router> default (allow|deny)
  agreement selective-export prefix <p>/<len> (avoid-as <asn> | neighbors <id,...>)
  agreement set-local-pref prefix <p>/<len> value <v>
  agreement avoid-as prefix <p>/<len> (as <asn> | neighbors <id,...>)
  agreement prefer-as prefix <p>/<len> (as <asn> | neighbors <id,...>)

A provider file carries config lines, a consumer file one agreement line;
both carry the identical published topology section.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import ScenarioError
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


@dataclass
class Scenario:
    topology: AbstractTopology
    widths: Widths
    configs: Dict[str, RouterConfig] = field(default_factory=dict)
    agreements: List[Agreement] = field(default_factory=list)


def parse_ip(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4 or not all(p.isdigit() and 0 <= int(p) <= 255 for p in parts):
        raise ScenarioError(f"bad IPv4 address {text!r}")
    v = 0
    for p in parts:
        v = (v << 8) | int(p)
    return v


def format_ip(v: int) -> str:
    return ".".join(str((v >> s) & 0xFF) for s in (24, 16, 8, 0))


def parse_prefix(text: str) -> Tuple[int, int]:
    if "/" not in text:
        raise ScenarioError(f"prefix must be addr/len, got {text!r}")
    addr, plen = text.rsplit("/", 1)
    if not plen.isdigit() or not 0 <= int(plen) <= 32:
        raise ScenarioError(f"bad prefix length in {text!r}")
    return parse_ip(addr), int(plen)


def _kv(tokens: List[str]) -> Dict[str, str]:
    if len(tokens) % 2:
        raise ScenarioError(f"dangling keyword in {' '.join(tokens)!r}")
    return {tokens[i]: tokens[i + 1] for i in range(0, len(tokens), 2)}


def _parse_rule(rest: List[str]) -> ExportRule:
    sel_kind, sel_val = rest[0], rest[1]
    action = rest[2]
    if action not in ("allow", "deny"):
        raise ScenarioError(f"rule action must be allow/deny, got {action!r}")
    match_toks = rest[3:]
    prefix = prefix_len = community = None
    if match_toks != ["any"]:
        kv = _kv(match_toks)
        for key, val in kv.items():
            if key == "prefix":
                prefix, prefix_len = parse_prefix(val)
            elif key == "community":
                community = int(val)
            else:
                raise ScenarioError(f"unknown rule match field {key!r}")
    return ExportRule(
        allow=action == "allow",
        neighbor=sel_val if sel_kind == "neighbor" else None,
        neighbor_as=int(sel_val) if sel_kind == "neighbor-as" else None,
        prefix=prefix,
        prefix_len=prefix_len,
        community=community,
    )


def _parse_agreement(tokens: List[str]) -> Agreement:
    kind = tokens[0]
    kv = _kv(tokens[1:])
    if "prefix" not in kv:
        raise ScenarioError("agreement needs a prefix")
    prefix, plen = parse_prefix(kv.pop("prefix"))
    neighbors = None
    if "neighbors" in kv:
        neighbors = tuple(x for x in kv.pop("neighbors").split(",") if x)
    if kind == "selective-export":
        target = int(kv.pop("avoid-as")) if "avoid-as" in kv else None
        if kv:
            raise ScenarioError(f"unknown agreement fields {sorted(kv)}")
        return Agreement(SELECTIVE_EXPORT, prefix, plen, target_as=target, neighbors=neighbors)
    if kind == "set-local-pref":
        value = int(kv.pop("value"))
        if kv:
            raise ScenarioError(f"unknown agreement fields {sorted(kv)}")
        return Agreement(SET_LOCAL_PREF, prefix, plen, local_pref=value)
    if kind in ("avoid-as", "prefer-as"):
        target = int(kv.pop("as")) if "as" in kv else None
        if kv:
            raise ScenarioError(f"unknown agreement fields {sorted(kv)}")
        return Agreement(
            PREFER_AVOID_AS,
            prefix,
            plen,
            target_as=target,
            neighbors=neighbors,
            prefer=kind == "prefer-as",
        )
    raise ScenarioError(f"unknown agreement kind {kind!r}")


def parse_scenario(text: str) -> Scenario:
    routers: List[Router] = []
    links: List[Tuple[str, str]] = []
    tags: List[int] = []
    provider_as: Optional[int] = None
    prefix_bits = 32
    raw_configs: Dict[str, dict] = {}
    agreements: List[Agreement] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            head = toks[0]
            if head == "param":
                if toks[1] != "prefix_bits":
                    raise ScenarioError(f"unknown parameter {toks[1]!r}")
                prefix_bits = int(toks[2])
            elif head == "provider-as":
                provider_as = int(toks[1])
            elif head == "router":
                kv = _kv(toks[2:])
                routers.append(Router(toks[1], int(kv["as"]), parse_ip(kv["ip"])))
            elif head == "link":
                links.append((toks[1], toks[2]))
            elif head == "tag":
                tags.append(int(toks[1]))
            elif head == "config":
                rid = toks[1]
                entry = raw_configs.setdefault(
                    rid, {"best": None, "rules": [], "default": True}
                )
                if toks[2] == "route":
                    kv = _kv(toks[3:])
                    prefix, plen = parse_prefix(kv["prefix"])
                    communities = frozenset(
                        int(t) for t in kv.get("communities", "").split(",") if t
                    )
                    entry["best"] = BestRoute(
                        prefix=prefix,
                        prefix_len=plen,
                        origin_as=int(kv["origin"]),
                        local_pref=int(kv["local-pref"]),
                        communities=communities,
                    )
                elif toks[2] == "default":
                    if toks[3] not in ("allow", "deny"):
                        raise ScenarioError("default must be allow or deny")
                    entry["default"] = toks[3] == "allow"
                elif toks[2] in ("neighbor", "neighbor-as"):
                    entry["rules"].append(_parse_rule(toks[2:]))
                else:
                    raise ScenarioError(f"unknown config clause {toks[2]!r}")
            elif head == "agreement":
                agreements.append(_parse_agreement(toks[1:]))
            else:
                raise ScenarioError(f"unknown declaration {head!r}")
        except ScenarioError as e:
            raise ScenarioError(f"line {lineno}: {e}") from None
        except (IndexError, KeyError, ValueError) as e:
            raise ScenarioError(f"line {lineno}: malformed declaration ({e})") from None

    if provider_as is None:
        raise ScenarioError("missing provider-as declaration")
    topo = AbstractTopology(routers, links, provider_as, sorted(set(tags)))
    configs: Dict[str, RouterConfig] = {}
    for rid, entry in raw_configs.items():
        topo.router(rid)
        if entry["best"] is None:
            raise ScenarioError(f"config {rid}: missing route declaration")
        configs[rid] = RouterConfig(
            rid, entry["best"], entry["rules"], entry["default"]
        )
    return Scenario(topo, Widths(prefix=prefix_bits), configs, agreements)


def topology_lines(topo: AbstractTopology, widths: Widths) -> List[str]:
    lines = [f"param prefix_bits {widths.prefix}", f"provider-as {topo.provider_as}"]
    for r in topo.routers:
        lines.append(f"router {r.rid} as {r.asn} ip {format_ip(r.ip)}")
    for a, b in topo.links:
        lines.append(f"link {a} {b}")
    for t in topo.tags:
        lines.append(f"tag {t}")
    return lines


def config_lines(cfg: RouterConfig) -> List[str]:
    b = cfg.best
    route = (
        f"config {cfg.rid} route prefix {format_ip(b.prefix)}/{b.prefix_len} "
        f"origin {b.origin_as} local-pref {b.local_pref}"
    )
    if b.communities:
        route += " communities " + ",".join(str(t) for t in sorted(b.communities))
    lines = [route]
    for rule in cfg.rules:
        sel = (
            f"neighbor {rule.neighbor}"
            if rule.neighbor is not None
            else f"neighbor-as {rule.neighbor_as}"
        )
        match = []
        if rule.prefix is not None:
            match.append(f"prefix {format_ip(rule.prefix)}/{rule.prefix_len}")
        if rule.community is not None:
            match.append(f"community {rule.community}")
        body = " ".join(match) if match else "any"
        lines.append(
            f"config {cfg.rid} {sel} {'allow' if rule.allow else 'deny'} {body}"
        )
    lines.append(f"config {cfg.rid} default {'allow' if cfg.default_export else 'deny'}")
    return lines


def agreement_line(a: Agreement) -> str:
    p = f"prefix {format_ip(a.prefix)}/{a.prefix_len}"
    if a.kind == SELECTIVE_EXPORT:
        tail = (
            f"avoid-as {a.target_as}"
            if a.target_as is not None
            else "neighbors " + ",".join(a.neighbors)
        )
        return f"agreement selective-export {p} {tail}"
    if a.kind == SET_LOCAL_PREF:
        return f"agreement set-local-pref {p} value {a.local_pref}"
    kind = "prefer-as" if a.prefer else "avoid-as"
    tail = (
        f"as {a.target_as}"
        if a.target_as is not None
        else "neighbors " + ",".join(a.neighbors)
    )
    return f"agreement {kind} {p} {tail}"


def provider_file(topo, widths, configs: Dict[str, RouterConfig]) -> str:
    lines = topology_lines(topo, widths)
    for rid in sorted(configs):
        lines += config_lines(configs[rid])
    return "\n".join(lines) + "\n"


def consumer_file(topo, widths, agreement: Agreement) -> str:
    lines = topology_lines(topo, widths) + [agreement_line(agreement)]
    return "\n".join(lines) + "\n"
