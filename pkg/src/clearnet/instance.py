"""JSON instance files: network, optional profile and optional strategy sets.

Amounts are written as reduced fractions ("3/4", "2"); decimals ("0.75")
are accepted on input.  ``dumps`` produces the canonical form, so
``dumps(loads(text)) == text`` for any canonical file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .equilibria import FiniteStrategySet
from .errors import ClearnetError
from .model import Edge, Network, to_q
from .strategies import PiecewiseLinear, Proportional, Ranking, ThresholdStrategy

SCHEMA = "clearnet-instance/1"
REPORT_SCHEMA = "clearnet-report/1"


class InstanceParseError(ClearnetError):
    pass


@dataclass
class Instance:
    network: Network
    meta: dict = field(default_factory=dict)
    profile: dict | None = None
    sets: FiniteStrategySet | None = None


def q(x) -> str:
    return str(Fraction(x))


# -- encoding ----------------------------------------------------------------------------------


def encode_rule(rule) -> dict:
    if isinstance(rule, Ranking):
        return {"kind": "ranking", "permutation": list(rule.order)}
    if isinstance(rule, Proportional):
        return {"kind": "proportional"}
    return {
        "kind": "piecewise",
        "breakpoints": {e: [[q(x), q(p)] for x, p in pts] for e, pts in rule.table.items()},
    }


def encode_strategy(s: ThresholdStrategy) -> dict:
    return {
        "node": s.owner,
        "thresholds": [[q(t) for t in row] for row in s.thresholds],
        "rules": [encode_rule(r) for r in s.rules],
    }


def to_json(inst: Instance) -> dict:
    net = inst.network
    doc: dict[str, Any] = {"schema": SCHEMA, "meta": inst.meta or {"name": "unnamed"}}
    doc["nodes"] = [{"id": v, "external_assets": q(net.b(v))} for v in net.nodes]
    edges = []
    for e in net.edges:
        item = {"id": e.id, "src": e.src, "dst": e.dst, "weight": q(e.weight)}
        if e.seniority is not None:
            item["seniority"] = e.seniority
        edges.append(item)
    doc["edges"] = edges
    if inst.profile:
        doc["strategies"] = [encode_strategy(inst.profile[v]) for v in net.nodes if v in inst.profile]
    if inst.sets is not None:
        doc["strategy_sets"] = [
            {
                "node": v,
                "options": [dict(label=lab, **{k: x for k, x in encode_strategy(s).items() if k != "node"})
                            for lab, s in zip(inst.sets.labels[v], opts)],
            }
            for v, opts in inst.sets.options.items() if len(opts) > 1
        ]
    return doc


def dumps(inst: Instance) -> str:
    return json.dumps(to_json(inst), indent=2) + "\n"


# -- decoding ----------------------------------------------------------------------------------


def _amount(x, where):
    try:
        return to_q(x if isinstance(x, str) else x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceParseError(f"{where}: bad amount {x!r}") from exc


def decode_rule(doc: dict, where: str):
    kind = doc.get("kind")
    if kind == "ranking":
        return Ranking(tuple(doc["permutation"]))
    if kind == "proportional":
        return Proportional()
    if kind == "piecewise":
        return PiecewiseLinear({
            e: tuple((_amount(x, where), _amount(p, where)) for x, p in pts)
            for e, pts in doc["breakpoints"].items()
        })
    raise InstanceParseError(f"{where}: unknown rule kind {kind!r}")


def decode_strategy(net: Network, node: str, doc: dict) -> ThresholdStrategy:
    where = f"strategy of {node}"
    if node not in net.node_index:
        raise InstanceParseError(f"{where}: unknown node")
    es = net.out_edges(node)
    rows = tuple(tuple(_amount(t, where) for t in row) for row in doc.get("thresholds", []))
    rules = tuple(decode_rule(r, where) for r in doc.get("rules", []))
    return ThresholdStrategy(node, tuple(e.id for e in es), tuple(e.weight for e in es), rows, rules)


def from_json(doc: dict) -> Instance:
    try:
        nodes = [n["id"] for n in doc["nodes"]]
        assets = {n["id"]: _amount(n.get("external_assets", "0"), f"node {n['id']}")
                  for n in doc["nodes"]}
        edges = [
            Edge(e["id"], e["src"], e["dst"], _amount(e["weight"], f"edge {e['id']}"), e.get("seniority"))
            for e in doc["edges"]
        ]
        net = Network(tuple(nodes), tuple(edges), {v: b for v, b in assets.items() if b != 0})
        profile = None
        if doc.get("strategies"):
            profile = {s["node"]: decode_strategy(net, s["node"], s) for s in doc["strategies"]}
        sets = None
        if doc.get("strategy_sets"):
            options, labels = {}, {}
            for entry in doc["strategy_sets"]:
                v = entry["node"]
                options[v] = [decode_strategy(net, v, o) for o in entry["options"]]
                labels[v] = [o.get("label", str(i + 1)) for i, o in enumerate(entry["options"])]
            sets = FiniteStrategySet.build(net, options, labels)
    except (KeyError, TypeError, AttributeError) as exc:
        raise InstanceParseError(f"malformed instance: {exc!r}") from exc
    return Instance(net, dict(doc.get("meta", {})), profile, sets)


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceParseError("instance must be a JSON object")
    return from_json(doc)


def load(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(inst))


def to_dot(net: Network, flows=None) -> str:
    """Graphviz export; edges are labelled ``flow/weight`` when flows are given."""
    lines = ["digraph clearing {"]
    for v in net.nodes:
        b = net.b(v)
        label = f"{v}\\nb={b}" if b else v
        lines.append(f'  "{v}" [label="{label}"];')
    for e in net.edges:
        label = q(e.weight) if flows is None else f"{q(flows[e.id])}/{q(e.weight)}"
        if e.seniority is not None:
            label += f" [{e.seniority}]"
        lines.append(f'  "{e.src}" -> "{e.dst}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
