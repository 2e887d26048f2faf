"""Welfare, welfare-optimal flows, and equilibrium search over finite strategy sets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Literal, Mapping, NamedTuple, Sequence

from .clearing import EngineConfig, clearing
from .errors import EnumerationTooLarge, InfeasibleTarget, InvalidProfile, UnsupportedObjective
from .lp import maximize
from .model import FlowState, Network, NodeId, enum_cap
from .strategies import (
    Ranking,
    ThresholdStrategy,
    default_strategy,
    validate_profile,
)

ZERO = Fraction(0)
Mode = Literal["min", "max"]


# -- welfare -----------------------------------------------------------------------------

WELFARE_KINDS = ("utilitarian", "total_flow", "liquid_count", "nash")


@dataclass(frozen=True)
class WelfareSpec:
    kind: str = "utilitarian"
    nth_root: bool = False  # only for "nash"; off keeps the value rational

    def __post_init__(self):
        if self.kind not in WELFARE_KINDS:
            raise ValueError(f"unknown welfare kind {self.kind!r}")


UTILITARIAN = WelfareSpec("utilitarian")
TOTAL_FLOW = WelfareSpec("total_flow")


def welfare(net: Network, flow: FlowState, spec: WelfareSpec = UTILITARIAN):
    if spec.kind == "utilitarian":
        return sum((flow.assets(v) for v in net.nodes), ZERO)
    if spec.kind == "total_flow":
        return sum(flow.flows.values(), ZERO)
    if spec.kind == "liquid_count":
        return sum(1 for v in net.nodes if flow.assets(v) >= net.total_liabilities(v))
    prod = math.prod((flow.assets(v) for v in net.nodes), start=Fraction(1))
    if spec.nth_root and net.nodes:
        return float(prod) ** (1 / len(net.nodes))
    return prod


# -- optimal flows -------------------------------------------------------------------------


def z_optimal_flow(net: Network, spec: WelfareSpec = TOTAL_FLOW) -> FlowState:
    """Welfare-maximal flow subject to weak flow conservation and capacities.

    Utilitarian welfare is the constant ``sum b`` plus the total flow, so both
    supported objectives solve the same linear program.
    """
    if spec.kind not in ("utilitarian", "total_flow"):
        raise UnsupportedObjective(f"{spec.kind} is not a linear objective")
    edges = net.edges
    n = len(edges)
    a, b = [], []
    for v in net.nodes:
        row = [ZERO] * n
        for j, e in enumerate(edges):
            if e.src == v:
                row[j] += 1
            if e.dst == v:
                row[j] -= 1
        a.append(row)
        b.append(net.b(v))
    for j, e in enumerate(edges):
        row = [ZERO] * n
        row[j] = Fraction(1)
        a.append(row)
        b.append(e.weight)
    _, x = maximize([1] * n, a, b)
    return FlowState(net, {e.id: x[j] for j, e in enumerate(edges)})


def conservation_violations(net: Network, f: FlowState) -> list[str]:
    out = [str(v) for v in f.check_bounds()]
    for v in net.nodes:
        paid = sum((f[e.id] for e in net.out_edges(v)), ZERO)
        have = f.assets(v)
        if paid > have:
            out.append(f"node {v} pays {paid} but has only {have}")
        elif paid < have and any(f[e.id] < e.weight for e in net.out_edges(v)):
            out.append(f"node {v} keeps {have - paid} while owing more")
    return out


def realize_flow_as_profile(net: Network, f: FlowState) -> dict:
    """Two-level profile whose first level pays exactly ``f``.

    A bank holding cash beyond its payments while still owing money cannot
    be realised by any payment function, so that is rejected as well.
    """
    problems = conservation_violations(net, f)
    if problems:
        raise InfeasibleTarget("; ".join(problems))
    prof = {}
    for v in net.debtors():
        es = net.out_edges(v)
        order = Ranking(tuple(e.id for e in es))
        prof[v] = ThresholdStrategy.levels(net, v, [{e.id: f[e.id] for e in es}], [order, order])
    return prof


# -- finite strategy sets ------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteStrategySet:
    """Explicit strategy lists per bank, each with a display label."""

    options: Mapping[NodeId, tuple[ThresholdStrategy, ...]]
    labels: Mapping[NodeId, tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def build(cls, net: Network, options: Mapping[NodeId, Sequence], labels: Mapping | None = None):
        """Fill in the default strategy for every debtor without options."""
        opts, labs = {}, {}
        for v in net.debtors():
            if v in options:
                opts[v] = tuple(options[v])
                given = (labels or {}).get(v)
                labs[v] = tuple(given) if given else tuple(str(i + 1) for i in range(len(opts[v])))
            else:
                opts[v] = (default_strategy(net, v),)
                labs[v] = ("fixed",)
        return cls(opts, labs)

    def nodes(self) -> list[NodeId]:
        return list(self.options)

    def strategic(self) -> list[NodeId]:
        return [v for v, o in self.options.items() if len(o) > 1]

    def size(self) -> int:
        return math.prod(len(o) for o in self.options.values())

    def profile(self, choice: Mapping[NodeId, int]) -> dict:
        return {v: self.options[v][choice.get(v, 0)] for v in self.options}

    def index_of(self, prof: Mapping) -> dict[NodeId, int]:
        out = {}
        for v, opts in self.options.items():
            try:
                out[v] = opts.index(prof[v])
            except (KeyError, ValueError):
                raise InvalidProfile(f"strategy of {v} is not in its finite set") from None
        return out

    def describe(self, choice: Mapping[NodeId, int]) -> dict[NodeId, str]:
        return {v: self.labels[v][choice[v]] for v in self.strategic()}

    def choices(self) -> Iterator[dict[NodeId, int]]:
        keys = self.strategic()
        for combo in itertools.product(*(range(len(self.options[v])) for v in keys)):
            yield dict(zip(keys, combo))

    def violations(self, net: Network) -> list[str]:
        out = []
        for v, opts in self.options.items():
            if len(set(opts)) != len(opts):
                out.append(f"duplicate strategies for {v}")
        base = self.profile({})
        for v, opts in self.options.items():
            for s in opts:
                prof = dict(base)
                prof[v] = s
                out.extend(str(x) for x in validate_profile(net, prof) if x.subject == f"node {v}")
        return out


def edge_ranking_sets(net: Network, nodes: Sequence[NodeId] | None = None) -> FiniteStrategySet:
    """All edge rankings (respecting fixed seniority classes)."""
    options, labels = {}, {}
    for v in nodes if nodes is not None else net.debtors():
        es = net.out_edges(v)
        if net.has_fixed_seniority(v):
            classes: dict[int, list] = {}
            for e in es:
                classes.setdefault(e.seniority, []).append(e.id)
            per_class = [list(itertools.permutations(classes[k])) for k in sorted(classes)]
            strategies = []
            for combo in itertools.product(*per_class):
                strategies.append(ThresholdStrategy.partition(net, v, [list(c) for c in combo]))
            options[v] = strategies
            labels[v] = [">".join(itertools.chain(*combo)) for combo in itertools.product(*per_class)]
        else:
            perms = list(itertools.permutations(e.id for e in es))
            options[v] = [ThresholdStrategy.ranking(net, v, p) for p in perms]
            labels[v] = [">".join(p) for p in perms]
    return FiniteStrategySet.build(net, options, labels)


def coin_ranking_sets(net: Network, budget: int = 1, coin=1,
                      nodes: Sequence[NodeId] | None = None) -> FiniteStrategySet:
    """Strategies that place ``budget`` coins one at a time, then rank the rest.

    Coin ``i`` raises the threshold of the chosen edge by ``coin`` (capped at
    its weight); everything beyond the coins is paid in edge order.
    """
    coin = Fraction(coin)
    options, labels = {}, {}
    for v in nodes if nodes is not None else net.debtors():
        if net.has_fixed_seniority(v):
            continue
        es = net.out_edges(v)
        ids = [e.id for e in es]
        seen, strategies, names = set(), [], []
        for seq in itertools.product(ids, repeat=budget):
            taus, tau = [], {e.id: ZERO for e in es}
            for eid in seq:
                tau = dict(tau)
                tau[eid] = min(tau[eid] + coin, net.edge(eid).weight)
                taus.append(tau)
            s = ThresholdStrategy.levels(net, v, taus, [Ranking(tuple(ids))] * (budget + 1))
            key = tuple(tuple(sorted(t.items())) for t in taus)
            if key in seen:
                continue
            seen.add(key)
            strategies.append(s)
            names.append("coins:" + ",".join(seq))
        options[v], labels[v] = strategies, names
    return FiniteStrategySet.build(net, options, labels)


# -- equilibrium checks -----------------------------------------------------------------------


class UtilityOracle:
    """Clearing utilities per profile choice, cached."""

    def __init__(self, net: Network, sets: FiniteStrategySet, mode: Mode, cfg: EngineConfig | None = None):
        self.net, self.sets, self.mode = net, sets, mode
        self.cfg = cfg or EngineConfig()
        self._cache: dict[tuple, FlowState] = {}

    def key(self, choice: Mapping[NodeId, int]) -> tuple:
        return tuple(choice.get(v, 0) for v in self.sets.nodes())

    def flow(self, choice: Mapping[NodeId, int]) -> FlowState:
        k = self.key(choice)
        if k not in self._cache:
            self._cache[k] = clearing(self.net, self.sets.profile(choice), self.mode, self.cfg).flow
        return self._cache[k]

    def utility(self, choice, v) -> Fraction:
        return self.flow(choice).assets(v)


class Deviation(NamedTuple):
    coalition: tuple
    changes: dict  # node -> label of the new strategy
    before: dict
    after: dict

    def to_json(self):
        return {
            "coalition": list(self.coalition),
            "changes": dict(self.changes),
            "before": {v: str(x) for v, x in self.before.items()},
            "after": {v: str(x) for v, x in self.after.items()},
        }


class NashCheck(NamedTuple):
    ok: bool
    witness: Deviation | None = None


def _unilateral(oracle: UtilityOracle, choice: dict) -> Deviation | None:
    sets = oracle.sets
    for v in sets.strategic():
        base = oracle.utility(choice, v)
        for i in range(len(sets.options[v])):
            if i == choice[v]:
                continue
            alt = dict(choice)
            alt[v] = i
            u = oracle.utility(alt, v)
            if u > base:
                return Deviation((v,), {v: sets.labels[v][i]}, {v: base}, {v: u})
    return None


def is_nash(net: Network, prof: Mapping, sets: FiniteStrategySet, mode: Mode,
            cfg: EngineConfig | None = None, oracle: UtilityOracle | None = None) -> NashCheck:
    oracle = oracle or UtilityOracle(net, sets, mode, cfg)
    choice = sets.index_of(prof)
    dev = _unilateral(oracle, choice)
    return NashCheck(dev is None, dev)


def _coalitional(oracle: UtilityOracle, choice: dict, all_choices: list) -> Deviation | None:
    sets = oracle.sets
    for alt in all_choices:
        coalition = tuple(v for v in sets.strategic() if alt[v] != choice[v])
        if not coalition:
            continue
        before = {v: oracle.utility(choice, v) for v in coalition}
        after = {v: oracle.utility(alt, v) for v in coalition}
        if all(after[v] > before[v] for v in coalition):
            return Deviation(coalition, {v: sets.labels[v][alt[v]] for v in coalition}, before, after)
    return None


def is_strong(net: Network, prof: Mapping, sets: FiniteStrategySet, mode: Mode,
              cfg: EngineConfig | None = None, oracle: UtilityOracle | None = None) -> NashCheck:
    """No coalition (of any size) can deviate within the sets and all gain."""
    oracle = oracle or UtilityOracle(net, sets, mode, cfg)
    _check_cap(sets)
    dev = _coalitional(oracle, sets.index_of(prof), list(sets.choices()))
    return NashCheck(dev is None, dev)


def _check_cap(sets: FiniteStrategySet):
    cap = enum_cap()
    if sets.size() > cap:
        raise EnumerationTooLarge(f"{sets.size()} profiles exceed the enumeration cap {cap}")


class SearchReport(NamedTuple):
    profile: dict | None
    choice: dict | None
    profiles_checked: int
    witnesses: list  # (choice labels, Deviation) for every rejected profile


def search_equilibrium_report(net: Network, sets: FiniteStrategySet, mode: Mode,
                              solution: Literal["nash", "strong"] = "nash",
                              cfg: EngineConfig | None = None) -> SearchReport:
    _check_cap(sets)
    oracle = UtilityOracle(net, sets, mode, cfg)
    all_choices = list(sets.choices())
    witnesses = []
    for n, choice in enumerate(all_choices, 1):
        if solution == "nash":
            dev = _unilateral(oracle, choice)
        else:
            dev = _coalitional(oracle, choice, all_choices)
        if dev is None:
            return SearchReport(sets.profile(choice), choice, n, witnesses)
        witnesses.append((sets.describe(choice), dev))
    return SearchReport(None, None, len(all_choices), witnesses)


def search_equilibrium(net: Network, sets: FiniteStrategySet, mode: Mode,
                       solution: Literal["nash", "strong"] = "nash",
                       cfg: EngineConfig | None = None) -> dict | None:
    """First equilibrium profile in enumeration order, or None."""
    return search_equilibrium_report(net, sets, mode, solution, cfg).profile


def optimal_profile_search(net: Network, sets: FiniteStrategySet, mode: Mode,
                           spec: WelfareSpec = UTILITARIAN,
                           cfg: EngineConfig | None = None) -> tuple[dict, Fraction]:
    """Welfare-maximal profile over the finite product (first one on ties)."""
    _check_cap(sets)
    oracle = UtilityOracle(net, sets, mode, cfg)
    best = None
    for choice in sets.choices():
        w = welfare(net, oracle.flow(choice), spec)
        if best is None or w > best[1]:
            best = (choice, w)
    return sets.profile(best[0]), best[1]


def utility_table(net: Network, sets: FiniteStrategySet, mode: Mode,
                  players: Sequence[NodeId] | None = None,
                  cfg: EngineConfig | None = None) -> dict[tuple, tuple]:
    """Utilities of ``players`` for every choice, keyed by strategy labels."""
    oracle = UtilityOracle(net, sets, mode, cfg)
    players = list(players or sets.strategic())
    table = {}
    for choice in sets.choices():
        key = tuple(sets.labels[v][choice[v]] for v in sets.strategic())
        table[key] = tuple(oracle.utility(choice, v) for v in players)
    return table
