"""Generators for the benchmark games and hardness constructions.

Edge ids follow ``"<src>-><dst>"``; parallel edges get a ``#i`` suffix
(1-based).  Every generator is deterministic.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .equilibria import FiniteStrategySet
from .errors import BTooSmall, DeltaTooSmall, GadgetParameterError
from .model import Edge, Network
from .strategies import Ranking, ThresholdStrategy

ZERO = Fraction(0)

Clause = tuple[int, ...]  # DIMACS-style literals: 3 means x3, -3 means not x3
Formula = Sequence[Clause]


class _Builder:
    def __init__(self, prefix: str = ""):
        self.prefix = prefix
        self.nodes: list[str] = []
        self.edges: list[Edge] = []
        self.assets: dict[str, Fraction] = {}

    def node(self, name, assets=0):
        name = self.prefix + name
        self.nodes.append(name)
        if assets:
            self.assets[name] = Fraction(assets)
        return name

    def edge(self, src, dst, weight=1, seniority=None, tag=""):
        src, dst = self.prefix + src, self.prefix + dst
        eid = f"{src}->{dst}{tag}"
        self.edges.append(Edge(eid, src, dst, Fraction(weight), seniority))
        return eid

    def bundle(self, src, dst, seniorities):
        """Parallel unit edges, one per seniority entry (None for unlabeled)."""
        return [self.edge(src, dst, 1, s, f"#{i + 1}") for i, s in enumerate(seniorities)]

    def network(self) -> Network:
        return Network(tuple(self.nodes), tuple(self.edges), dict(self.assets))


def _merge(*parts: Network, extra_edges=(), extra_assets=None) -> Network:
    nodes, edges, assets = [], [], {}
    for p in parts:
        nodes.extend(p.nodes)
        edges.extend(p.edges)
        for v, b in p.external_assets.items():
            assets[v] = assets.get(v, ZERO) + b
    edges.extend(extra_edges)
    for v, b in (extra_assets or {}).items():
        assets[v] = assets.get(v, ZERO) + Fraction(b)
    return Network(tuple(nodes), tuple(edges), assets)


# -- small examples ----------------------------------------------------------------------


def gen_example1() -> Network:
    """Five banks; v1 holds one unit and both v1 and v2 choose whom to pay first."""
    b = _Builder()
    for i in range(1, 6):
        b.node(f"v{i}", 1 if i == 1 else 0)
    for src, dst in [("v1", "v2"), ("v1", "v4"), ("v2", "v3"), ("v2", "v5"), ("v3", "v1")]:
        b.edge(src, dst)
    return b.network()


def example1_profile(net: Network, v1_first: str, v2_first: str) -> dict:
    """Edge-ranking profile; ``v1_first`` is "v2" or "v4", ``v2_first`` is "v3" or "v5"."""
    def order(src, first):
        ids = [e.id for e in net.out_edges(src)]
        head = f"{src}->{first}"
        return [head] + [e for e in ids if e != head]

    return {
        "v1": ThresholdStrategy.ranking(net, "v1", order("v1", v1_first)),
        "v2": ThresholdStrategy.ranking(net, "v2", order("v2", v2_first)),
        "v3": ThresholdStrategy.ranking(net, "v3"),
    }


EXAMPLE1_PROFILES = {
    "a": ("v4", "v3"),
    "a'": ("v2", "v5"),
    "b": ("v2", "v3"),
    "c": ("v4", "v5"),
}


def gen_no_social_opt(n: int) -> Network:
    """Bank v with one unit owes a unit to a cycle w1..wn and to a path u1..un."""
    if n < 2:
        raise GadgetParameterError("n must be at least 2")
    b = _Builder()
    b.node("v", 1)
    for i in range(1, n + 1):
        b.node(f"w{i}")
    for i in range(1, n + 1):
        b.node(f"u{i}")
    b.edge("v", "w1")
    b.edge("v", "u1")
    for i in range(1, n + 1):
        b.edge(f"w{i}", f"w{i % n + 1}")
    for i in range(1, n):
        b.edge(f"u{i}", f"u{i + 1}")
    return b.network()


def no_social_opt_profile(net: Network, eps) -> dict:
    """v sends ``eps`` into the cycle and ``1 - eps`` down the path."""
    eps = Fraction(eps)
    prof = {v: ThresholdStrategy.ranking(net, v) for v in net.debtors()}
    order = Ranking(("v->w1", "v->u1"))
    prof["v"] = ThresholdStrategy.levels(net, "v", [{"v->w1": eps, "v->u1": 1 - eps}], [order, order])
    return prof


# -- Hamiltonian path reduction -------------------------------------------------------------


def gen_hampath_reduction(nodes: Sequence[str], arcs: Sequence[tuple[str, str]]) -> Network:
    """Source ``s`` with one unit, a unit gadget ``v- -> v+`` per vertex, arcs ``v+ -> w-``."""
    b = _Builder()
    b.node("s", 1)
    for v in nodes:
        b.node(f"{v}-")
        b.node(f"{v}+")
    for v in nodes:
        b.edge("s", f"{v}-")
    for v in nodes:
        b.edge(f"{v}-", f"{v}+")
    for v, w in arcs:
        if v == w:
            raise GadgetParameterError("the digraph must be simple")
        b.edge(f"{v}+", f"{w}-")
    return b.network()


def has_hamiltonian_path(nodes: Sequence[str], arcs: Sequence[tuple[str, str]]) -> bool:
    import itertools

    arcset = set(arcs)
    return any(all((p[i], p[i + 1]) in arcset for i in range(len(p) - 1))
               for p in itertools.permutations(nodes))


# -- 3-SAT reduction --------------------------------------------------------------------------


def formula_size(phi: Formula) -> tuple[int, int]:
    n = max((abs(lit) for c in phi for lit in c), default=0)
    return n, len(phi)


def default_b(phi: Formula) -> int:
    n, m = formula_size(phi)
    return 2 * (m + n) + 2


def is_satisfiable(phi: Formula) -> bool:
    import itertools

    n, _ = formula_size(phi)
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in phi):
            return True
    return False


def pad_clause(lits: Sequence[int]) -> Clause:
    """Repeat the last literal until the clause has three literals."""
    lits = list(lits)
    while len(lits) < 3:
        lits.append(lits[-1])
    return tuple(lits)


def _literal_node(lit: int) -> str:
    return f"x{abs(lit)}{'T' if lit > 0 else 'F'}"


def _sat_builder(phi: Formula, B: int | None, prefix: str = "") -> _Builder:
    n, m = formula_size(phi)
    if m < 1:
        raise GadgetParameterError("the formula needs at least one clause")
    for c in phi:
        if not 1 <= len(c) <= 3 or 0 in c:
            raise GadgetParameterError(f"bad clause {c}")
    B = default_b(phi) if B is None else int(B)
    if B <= m:
        raise BTooSmall(f"B = {B} must exceed the number of clauses m = {m}")
    b = _Builder(prefix)
    for i in range(1, n + 1):
        b.node(f"x{i}", B)
        b.node(f"x{i}T")
        b.node(f"x{i}F")
        b.node(f"s{i}T")
        b.node(f"s{i}F")
    for j in range(1, m + 1):
        b.node(f"k{j}", 1)
    b.node("phi")
    b.node("s_phi")
    for i in range(1, B + 1):
        b.node(f"u{i}")
    for i in range(1, n + 1):
        b.edge(f"x{i}", f"x{i}T", B)
        b.edge(f"x{i}", f"x{i}F", B)
    for i in range(1, n + 1):
        for side in "TF":
            b.edge(f"x{i}{side}", f"s{i}{side}", B, 1)
            b.edge(f"x{i}{side}", "phi", m, 2)
    for j, clause in enumerate(phi, 1):
        seen: dict[str, int] = {}
        for lit in clause:
            target = _literal_node(lit)
            seen[target] = seen.get(target, 0) + 1
            b.edge(f"k{j}", target, 1, None, f"#{seen[target]}")
    if m > 1:
        b.edge("phi", "s_phi", m - 1, 1)
    b.edge("phi", "u1", 1, 2)
    for i in range(1, B):
        b.edge(f"u{i}", f"u{i + 1}")
    return b


def gen_sat_reduction(phi: Formula, B: int | None = None) -> Network:
    """Variable gadgets, clause banks and a payout path of length B.

    The path only carries money if every clause bank pays through a literal
    that its variable bank has unlocked, i.e. iff the assignment satisfies
    the formula.  With a single clause the zero-weight edge to ``s_phi`` is
    omitted.
    """
    return _sat_builder(phi, B).network()


def sat_optimum(phi: Formula, B: int | None = None) -> Fraction:
    n, m = formula_size(phi)
    B = default_b(phi) if B is None else B
    return Fraction((3 * n + 1) * B + 4 * m - 1)


def sat_strategy_options(net: Network, phi: Formula, prefix: str = "") -> tuple[dict, dict]:
    """Variable banks pick a side; clause banks pick which literal to pay first."""
    n, m = formula_size(phi)
    options, labels = {}, {}
    for i in range(1, n + 1):
        v = f"{prefix}x{i}"
        opts, labs = [], []
        for side in "TF":
            head = f"{v}->{prefix}x{i}{side}"
            other = f"{v}->{prefix}x{i}{'F' if side == 'T' else 'T'}"
            opts.append(ThresholdStrategy.ranking(net, v, [head, other]))
            labs.append(f"x{i}={side}")
        options[v], labels[v] = opts, labs
    for j, clause in enumerate(phi, 1):
        v = f"{prefix}k{j}"
        ids = [e.id for e in net.out_edges(v)]
        opts, labs, targets = [], [], []
        for e in net.out_edges(v):
            if e.dst in targets:
                continue
            targets.append(e.dst)
            opts.append(ThresholdStrategy.ranking(net, v, [e.id] + [x for x in ids if x != e.id]))
            labs.append(f"pay {e.dst[len(prefix):]}")
        options[v], labels[v] = opts, labs
    return options, labels


def sat_strategy_sets(net: Network, phi: Formula) -> FiniteStrategySet:
    options, labels = sat_strategy_options(net, phi)
    return FiniteStrategySet.build(net, options, labels)


# -- max-clearing game without Nash equilibrium ----------------------------------------------------


def gen_max_no_ne() -> tuple[Network, FiniteStrategySet]:
    """Three symmetric parts, no external assets, unit edges.

    Part p has player P = v(3p+1), a relay A = v(3p+2) and a hub C = v(3p+3)
    plus the return node X = v(10+p).  P owes A twice and the previous hub
    three times; A must pay C before P; C pays X, the next return node and
    then the next player twice.
    """
    net = _max_no_ne_network()
    return net, max_no_ne_sets(net)


def _max_no_ne_network() -> Network:
    b = _Builder()
    for i in range(1, 13):
        b.node(f"v{i}")
    for p in range(3):
        P, A, C = f"v{3 * p + 1}", f"v{3 * p + 2}", f"v{3 * p + 3}"
        prev_c = f"v{3 * ((p - 1) % 3) + 3}"
        x_here, x_next = f"v{10 + p}", f"v{10 + (p + 1) % 3}"
        next_p = f"v{3 * ((p + 1) % 3) + 1}"
        b.bundle(P, A, [None, None])
        b.bundle(P, prev_c, [None, None, None])
        b.edge(A, C, 1, 1)
        b.edge(A, P, 1, 2)
        b.edge(C, x_here, 1, 1)
        b.edge(C, x_next, 1, 2)
        b.bundle(C, next_p, [3, 4])
    for p in range(3):
        b.edge(f"v{10 + p}", f"v{3 * p + 1}")
    return b.network()


MAX_NO_NE_PLAYERS = ("v1", "v4", "v7")
SPLIT_SAMPLES = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4))


def _bundles(net: Network, player: str) -> tuple[list[str], list[str]]:
    """Out-edges of a player grouped by destination, in declaration order."""
    groups: dict[str, list[str]] = {}
    for e in net.out_edges(player):
        groups.setdefault(e.dst, []).append(e.id)
    first, second = groups.values()
    return first, second


def max_no_ne_category(net: Network, player: str, category: int, split=None) -> ThresholdStrategy:
    """(1) relay bundle first, (2) hub bundle first, (3) split the first unit.

    A category-3 strategy sends ``split`` of the first unit to the relay and
    the rest to the hub, then ranks relay before hub.
    """
    relay, hub = _bundles(net, player)
    if category == 1:
        return ThresholdStrategy.ranking(net, player, relay + hub)
    if category == 2:
        return ThresholdStrategy.ranking(net, player, hub + relay)
    lam = Fraction(split)
    order = Ranking(tuple(relay + hub))
    return ThresholdStrategy.levels(net, player, [{relay[0]: lam, hub[0]: 1 - lam}], [order, order])


def max_no_ne_sets(net: Network, samples: Sequence = ()) -> FiniteStrategySet:
    options, labels = {}, {}
    for v in MAX_NO_NE_PLAYERS:
        opts = [max_no_ne_category(net, v, 1), max_no_ne_category(net, v, 2)]
        labs = ["(1)", "(2)"]
        for lam in samples:
            opts.append(max_no_ne_category(net, v, 3, lam))
            labs.append(f"(3:{lam})")
        options[v], labels[v] = opts, labs
    return FiniteStrategySet.build(net, options, labels)


# -- min-clearing game without Nash equilibrium -----------------------------------------------------


MIN_NO_NE_PLAYERS = ("v1", "v5", "v9")


def gen_min_no_ne(delta: int = 2, samples: Sequence = SPLIT_SAMPLES) -> tuple[Network, FiniteStrategySet]:
    net = _min_no_ne_network(delta)
    return net, min_no_ne_sets(net, delta, samples)


def _min_no_ne_network(delta: int, prefix: str = "") -> Network:
    """Three symmetric parts built from unit edges.

    Part p: player P = v(4p+1) holding delta+1, relay A = v(4p+2), hub
    C = v(4p+3), and D = v(4p) (v12 for p = 0) fed by P.  Sinks catch
    whatever the seniorities route out of the game.
    """
    if int(delta) != delta or delta < 2:
        raise DeltaTooSmall("delta must be an integer >= 2")
    d = int(delta)
    b = _Builder(prefix)
    for i in range(1, 22):
        b.node(f"v{i}", d + 1 if i in (1, 5, 9) else 0)

    def P(p): return f"v{4 * (p % 3) + 1}"
    def A(p): return f"v{4 * (p % 3) + 2}"
    def C(p): return f"v{4 * (p % 3) + 3}"
    def D(p): return f"v{4 * (p % 3) if p % 3 else 12}"

    for p in range(3):
        b.bundle(P(p), A(p), [None] * (d + 3))
        b.bundle(P(p), D(p), [None] * (d + 2))
    for p in range(3):
        b.bundle(A(p), f"v{13 + 3 * p}", list(range(1, d + 1)))
        b.bundle(A(p), C(p), [d + 1, d + 2, d + 3])
    for p in range(3):
        b.edge(C(p), f"v{14 + 3 * p}", 1, 1)
        b.edge(C(p), P(p + 1), 1, 2)
        b.bundle(C(p), P(p), [3, 4, 5])
    for p in range(3):
        sink = f"v{15 + 3 * ((p - 1) % 3)}"
        if d > 1:
            b.bundle(D(p), sink, list(range(1, d)))
        b.edge(D(p), C(p - 1), 1, d, "#1")
        b.edge(D(p), P(p), 1, d + 1)
        b.edge(D(p), C(p - 1), 1, d + 2, "#2")
    return b.network()


def min_no_ne_category(net: Network, player: str, category: int, delta: int, split=None) -> ThresholdStrategy:
    """(1) pay the D bundle first, (2) the relay bundle first, (3) split.

    A category-3 strategy first pays ``1 + split*(delta-1)`` towards D and the
    rest of its own assets towards the relay, so that neither side is fully
    unlocked, then ranks D before the relay.
    """
    relay, dside = _bundles(net, player)
    if category == 1:
        return ThresholdStrategy.ranking(net, player, dside + relay)
    if category == 2:
        return ThresholdStrategy.ranking(net, player, relay + dside)
    lam = Fraction(split)
    to_d = 1 + lam * (delta - 1)
    to_relay = delta + 1 - to_d
    tau = {}
    for ids, amount in ((dside, to_d), (relay, to_relay)):
        for eid in ids:
            part = min(amount, Fraction(1))
            tau[eid] = part
            amount -= part
    order = Ranking(tuple(dside + relay))
    return ThresholdStrategy.levels(net, player, [tau], [order, order])


def min_no_ne_sets(net: Network, delta: int, samples: Sequence = SPLIT_SAMPLES,
                   prefix: str = "", players=MIN_NO_NE_PLAYERS) -> FiniteStrategySet:
    options, labels = min_no_ne_options(net, delta, samples, prefix, players)
    return FiniteStrategySet.build(net, options, labels)


def min_no_ne_options(net, delta, samples=SPLIT_SAMPLES, prefix="", players=MIN_NO_NE_PLAYERS):
    options, labels = {}, {}
    for v in players:
        v = prefix + v
        opts = [min_no_ne_category(net, v, 1, delta), min_no_ne_category(net, v, 2, delta)]
        labs = ["(1)", "(2)"]
        for lam in samples:
            opts.append(min_no_ne_category(net, v, 3, delta, lam))
            labs.append(f"(3:{lam})")
        options[v], labels[v] = opts, labs
    return options, labels


# -- equilibrium-existence reductions ---------------------------------------------------------------


def gen_ne_decision(mode: str, phi: Formula, B: int | None = None, delta: int = 2,
                    copies: int = 1) -> Network:
    """SAT gadget(s) whose payout path feeds player v1 of a game without equilibrium.

    ``max``: one gadget and the max-clearing game, joined by a unit edge
    ``u_B -> v1``.  ``min``: ``copies`` gadgets (node names prefixed
    ``c<j>:``), each joined to v1 of the min-clearing game.
    """
    B = default_b(phi) if B is None else int(B)
    if mode == "max":
        sat = _sat_builder(phi, B).network()
        core = _max_no_ne_network()
        link = Edge(f"u{B}->v1", f"u{B}", "v1", Fraction(1))
        return _merge(sat, core, extra_edges=[link])
    if mode == "min":
        if copies < 1:
            raise GadgetParameterError("copies must be positive")
        gadgets = [_sat_builder(phi, B, f"c{j}:").network() for j in range(1, copies + 1)]
        core = _min_no_ne_network(delta)
        links = [Edge(f"c{j}:u{B}->v1", f"c{j}:u{B}", "v1", Fraction(1)) for j in range(1, copies + 1)]
        return _merge(*gadgets, core, extra_edges=links)
    raise GadgetParameterError(f"unknown mode {mode!r}")


def ne_decision_sets(net: Network, mode: str, phi: Formula, delta: int = 2, copies: int = 1,
                     samples: Sequence = ()) -> FiniteStrategySet:
    """Assignment choices for the SAT banks plus category strategies for the core players."""
    options, labels = {}, {}
    prefixes = [""] if mode == "max" else [f"c{j}:" for j in range(1, copies + 1)]
    for pre in prefixes:
        o, l = sat_strategy_options(net, phi, pre)
        options.update(o)
        labels.update(l)
    if mode == "max":
        for v in MAX_NO_NE_PLAYERS:
            options[v] = [max_no_ne_category(net, v, c) for c in (1, 2)]
            options[v] += [max_no_ne_category(net, v, 3, lam) for lam in samples]
            labels[v] = ["(1)", "(2)"] + [f"(3:{lam})" for lam in samples]
    else:
        o, l = min_no_ne_options(net, delta, samples)
        options.update(o)
        labels.update(l)
    return FiniteStrategySet.build(net, options, labels)


# -- random instances --------------------------------------------------------------------------------


def gen_random(seed: int, n_nodes: int = 5, n_edges: int = 8, max_weight: int = 3,
               max_assets: int = 2, rule: str = "ranking") -> tuple[Network, dict]:
    """Random integral network and profile (ranking or proportional rules).

    Self-loops are avoided; parallel edges may occur.  About half of the
    banks get external assets.
    """
    rng = random.Random(seed)
    b = _Builder()
    for i in range(n_nodes):
        b.node(f"n{i}", rng.randint(1, max_assets) if rng.random() < 0.5 else 0)
    if not b.assets:
        b.assets[b.nodes[0]] = Fraction(rng.randint(1, max_assets))
    count: dict[tuple, int] = {}
    for _ in range(n_edges):
        src, dst = rng.sample(b.nodes, 2)
        count[(src, dst)] = count.get((src, dst), 0) + 1
        b.edge(src, dst, rng.randint(1, max_weight), None, f"#{count[(src, dst)]}")
    net = b.network()
    prof = {}
    for v in net.debtors():
        ids = [e.id for e in net.out_edges(v)]
        if rule == "proportional":
            prof[v] = ThresholdStrategy.proportional(net, v)
        else:
            rng.shuffle(ids)
            prof[v] = ThresholdStrategy.ranking(net, v, ids)
    return net, prof


@dataclass(frozen=True)
class GadgetSpec:
    kind: str
    params: dict = field(default_factory=dict)


def build_gadget(spec: GadgetSpec) -> tuple[Network, dict | None, FiniteStrategySet | None]:
    """Network, default profile (if any) and recommended sets for a gadget spec."""
    k, p = spec.kind, spec.params
    if k == "example1":
        net = gen_example1()
        return net, example1_profile(net, *EXAMPLE1_PROFILES[p.get("profile", "a")]), None
    if k == "no-social-opt":
        net = gen_no_social_opt(int(p.get("n", 3)))
        return net, no_social_opt_profile(net, p.get("eps", Fraction(1, 2))), None
    if k == "hampath":
        net = gen_hampath_reduction(p["nodes"], [tuple(a) for a in p["arcs"]])
        from .equilibria import coin_ranking_sets

        sets = coin_ranking_sets(net, 1)
        return net, sets.profile({}), sets
    if k == "sat":
        phi = [tuple(c) for c in p["formula"]]
        net = gen_sat_reduction(phi, p.get("B"))
        sets = sat_strategy_sets(net, phi)
        return net, sets.profile({}), sets
    if k == "max-no-ne":
        net, sets = gen_max_no_ne()
        return net, sets.profile({}), sets
    if k == "min-no-ne":
        net, sets = gen_min_no_ne(int(p.get("delta", 2)), ())
        return net, sets.profile({}), sets
    if k == "ne-decision":
        phi = [tuple(c) for c in p["formula"]]
        mode = p.get("mode", "max")
        delta, copies = int(p.get("delta", 2)), int(p.get("copies", 1))
        net = gen_ne_decision(mode, phi, p.get("B"), delta, copies)
        sets = ne_decision_sets(net, mode, phi, delta, copies)
        return net, sets.profile({}), sets
    if k == "random":
        net, prof = gen_random(int(p.get("seed", 0)), int(p.get("nodes", 5)), int(p.get("edges", 8)),
                               int(p.get("max_weight", 3)), int(p.get("max_assets", 2)),
                               p.get("rule", "ranking"))
        return net, prof, None
    raise GadgetParameterError(f"unknown gadget {k!r}")

