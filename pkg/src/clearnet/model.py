"""Liability networks, edges and flow states.

All money amounts are held as :class:`fractions.Fraction`. Node and edge ids
are strings; the order in which nodes and edges are declared is the canonical
order used for every deterministic tie-break in the library.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

NodeId = str
EdgeId = str

DEFAULT_ENUM_CAP = 250_000


def to_q(value) -> Fraction:
    """Parse an exact rational from an int, Fraction, "p/q" or decimal string.

    Floats are converted exactly (binary expansion), which is only meant for
    values that came out of float iteration in the first place.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not amounts")
    if isinstance(value, (int, float)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty amount")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as a rational amount")


def enum_cap() -> int:
    raw = os.environ.get("CLEARNET_ENUM_CAP")
    return int(raw) if raw else DEFAULT_ENUM_CAP


@dataclass(frozen=True)
class Edge:
    id: EdgeId
    src: NodeId
    dst: NodeId
    weight: Fraction
    seniority: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "weight", to_q(self.weight))


@dataclass(frozen=True)
class Network:
    """Directed liability multigraph with external assets.

    ``external_assets`` may omit nodes; missing entries mean zero and zero
    entries are dropped, so equality does not depend on how zeros were given.
    """

    nodes: tuple[NodeId, ...]
    edges: tuple[Edge, ...]
    external_assets: Mapping[NodeId, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(
            self,
            "external_assets",
            {v: q for v, q in ((v, to_q(b)) for v, b in dict(self.external_assets).items()) if q != 0},
        )

    @classmethod
    def build(cls, nodes: Iterable[NodeId], edges: Iterable, assets: Mapping | None = None):
        """Convenience constructor; ``edges`` items may be tuples
        ``(id, src, dst, weight[, seniority])`` or :class:`Edge` objects."""
        es = []
        for e in edges:
            es.append(e if isinstance(e, Edge) else Edge(*e))
        return cls(tuple(nodes), tuple(es), dict(assets or {}))

    @cached_property
    def node_index(self) -> dict[NodeId, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def edge_index(self) -> dict[EdgeId, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def _out(self) -> dict[NodeId, tuple[Edge, ...]]:
        out: dict[NodeId, list[Edge]] = {v: [] for v in self.nodes}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        return {v: tuple(es) for v, es in out.items()}

    @cached_property
    def _in(self) -> dict[NodeId, tuple[Edge, ...]]:
        inc: dict[NodeId, list[Edge]] = {v: [] for v in self.nodes}
        for e in self.edges:
            inc.setdefault(e.dst, []).append(e)
        return {v: tuple(es) for v, es in inc.items()}

    def edge(self, eid: EdgeId) -> Edge:
        return self.edges[self.edge_index[eid]]

    def out_edges(self, v: NodeId) -> tuple[Edge, ...]:
        return self._out.get(v, ())

    def in_edges(self, v: NodeId) -> tuple[Edge, ...]:
        return self._in.get(v, ())

    def b(self, v: NodeId) -> Fraction:
        return self.external_assets.get(v, Fraction(0))

    def total_liabilities(self, v: NodeId) -> Fraction:
        """c^+_v: total weight owed by ``v``."""
        return sum((e.weight for e in self.out_edges(v)), Fraction(0))

    def total_claims(self, v: NodeId) -> Fraction:
        """c^-_v: total weight owed to ``v`` (in-weight)."""
        return sum((e.weight for e in self.in_edges(v)), Fraction(0))

    def has_fixed_seniority(self, v: NodeId) -> bool:
        return any(e.seniority is not None for e in self.out_edges(v))

    def debtors(self) -> list[NodeId]:
        """Nodes with at least one outgoing edge, in node order."""
        return [v for v in self.nodes if self.out_edges(v)]


@dataclass(frozen=True)
class Violation:
    subject: str
    message: str

    def __str__(self):
        return f"{self.subject}: {self.message}"


def validate_network(net: Network) -> list[Violation]:
    out: list[Violation] = []
    seen: set[NodeId] = set()
    for v in net.nodes:
        if v in seen:
            out.append(Violation(f"node {v}", "duplicate node id"))
        seen.add(v)
    for v, b in net.external_assets.items():
        if v not in seen:
            out.append(Violation(f"node {v}", "external assets given for unknown node"))
        if b < 0:
            out.append(Violation(f"node {v}", f"negative external assets {b}"))
    eids: set[EdgeId] = set()
    for e in net.edges:
        subj = f"edge {e.id}"
        if e.id in eids:
            out.append(Violation(subj, "duplicate edge id"))
        eids.add(e.id)
        if e.src not in seen:
            out.append(Violation(subj, f"unknown source {e.src}"))
        if e.dst not in seen:
            out.append(Violation(subj, f"unknown destination {e.dst}"))
        if e.src == e.dst:
            out.append(Violation(subj, "self-loop"))
        if e.weight <= 0:
            out.append(Violation(subj, f"weight must be positive, got {e.weight}"))
        if e.seniority is not None and (not isinstance(e.seniority, int) or e.seniority < 1):
            out.append(Violation(subj, f"seniority must be a positive integer, got {e.seniority!r}"))
    for v in net.nodes:
        labels = [e.seniority is not None for e in net.out_edges(v)]
        if any(labels) and not all(labels):
            out.append(Violation(f"node {v}", "only some outgoing edges carry a fixed seniority"))
    return out


@dataclass(frozen=True)
class FlowState:
    """Payment per edge together with the network it lives on."""

    net: Network = field(compare=False, repr=False)
    flows: Mapping[EdgeId, Fraction]

    @classmethod
    def zero(cls, net: Network) -> "FlowState":
        return cls(net, {e.id: Fraction(0) for e in net.edges})

    @classmethod
    def of(cls, net: Network, flows: Mapping) -> "FlowState":
        """Build from a partial mapping; unspecified edges carry zero."""
        full = {e.id: Fraction(0) for e in net.edges}
        for k, val in flows.items():
            if k not in full:
                raise KeyError(f"unknown edge {k}")
            full[k] = to_q(val)
        return cls(net, full)

    def __hash__(self):
        return hash(tuple(sorted(self.flows.items())))

    def __getitem__(self, eid: EdgeId) -> Fraction:
        return self.flows[eid]

    def assets(self, v: NodeId) -> Fraction:
        return self.net.b(v) + sum((self.flows[e.id] for e in self.net.in_edges(v)), Fraction(0))

    utility = assets

    def utilities(self) -> dict[NodeId, Fraction]:
        return {v: self.assets(v) for v in self.net.nodes}

    def residual(self, eid: EdgeId) -> Fraction:
        return self.net.edge(eid).weight - self.flows[eid]

    def saturated(self, tol=0) -> set[EdgeId]:
        return {e.id for e in self.net.edges if e.weight - self.flows[e.id] <= tol}

    def leq(self, other: "FlowState", tol=0) -> bool:
        return all(self.flows[k] <= other.flows[k] + tol for k in self.flows)

    def distance(self, other: "FlowState") -> Fraction:
        """Sup-norm distance between two flows on the same network."""
        return max((abs(self.flows[k] - other.flows[k]) for k in self.flows), default=Fraction(0))

    def nonzero(self) -> dict[EdgeId, Fraction]:
        return {k: f for k, f in self.flows.items() if f != 0}

    def check_bounds(self) -> list[Violation]:
        bad = []
        for e in self.net.edges:
            f = self.flows.get(e.id)
            if f is None:
                bad.append(Violation(f"edge {e.id}", "missing flow"))
            elif f < 0 or f > e.weight:
                bad.append(Violation(f"edge {e.id}", f"flow {f} outside [0, {e.weight}]"))
        return bad
