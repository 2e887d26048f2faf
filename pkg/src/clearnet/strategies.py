"""Payment rules, threshold strategies and strategy profiles.

A bank's strategy is split into ``k`` priority levels by ``k-1`` threshold
vectors.  Level ``i`` owns the installment ``tau_i - tau_{i-1}`` of every
outgoing edge and is paid by its own payment rule once all earlier levels
are fully paid.  Rules are piecewise linear in the cash they receive, which
is what the exact clearing algorithm relies on.

Rules are evaluated against a claim vector aligned with an edge tuple; the
same rule object can therefore be reused for different installments.
Evaluation works with Fractions (exact) and with floats (Kleene iteration).
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping, Sequence

from .errors import InvalidProfile
from .model import EdgeId, Network, NodeId, Violation, to_q

ZERO = Fraction(0)
ONE = Fraction(1)


# -- payment rules ---------------------------------------------------------------


@dataclass(frozen=True)
class Ranking:
    """Pay claims to saturation in the order given by ``order``."""

    order: tuple[EdgeId, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))

    kind = "ranking"

    def _positions(self, edges):
        idx = {e: i for i, e in enumerate(edges)}
        return [idx[e] for e in self.order if e in idx]

    def pay(self, u, edges, claims):
        out = [ZERO] * len(edges)
        rem = u
        for i in self._positions(edges):
            if rem <= 0:
                break
            c = claims[i]
            if c <= 0:
                continue
            p = c if rem >= c else rem
            out[i] = p
            rem = rem - p
        return out

    def breakpoints(self, edges, claims):
        pts, cum = [ZERO], ZERO
        for i in self._positions(edges):
            if claims[i] > 0:
                cum += claims[i]
                pts.append(cum)
        return pts

    def slopes(self, u, edges, claims, right=True):
        out = [ZERO] * len(edges)
        if not right and u <= 0:
            return out
        cum = ZERO
        for i in self._positions(edges):
            c = claims[i]
            if c <= 0:
                continue
            if (u < cum + c) if right else (u <= cum + c):
                out[i] = ONE
                return out
            cum += c
        return out

    def validate(self, edges, claims) -> list[str]:
        if sorted(self.order) != sorted(edges):
            return [f"ranking order {list(self.order)} is not a permutation of {list(edges)}"]
        return []

    def rekey(self, mapping: Mapping[EdgeId, EdgeId]) -> "Ranking":
        return Ranking(tuple(mapping[e] for e in self.order))


@dataclass(frozen=True)
class Proportional:
    """Pay every claim in proportion to its size."""

    kind = "proportional"

    def pay(self, u, edges, claims):
        total = sum(claims, ZERO)
        if total <= 0:
            return [ZERO] * len(edges)
        v = u if u < total else total
        return [v * c / total for c in claims]

    def breakpoints(self, edges, claims):
        return [ZERO, sum(claims, ZERO)]

    def slopes(self, u, edges, claims, right=True):
        total = sum(claims, ZERO)
        active = (0 <= u < total) if right else (0 < u <= total)
        if total <= 0 or not active:
            return [ZERO] * len(edges)
        return [c / total for c in claims]

    def validate(self, edges, claims) -> list[str]:
        return []

    def rekey(self, mapping):
        return self


@dataclass(frozen=True)
class PiecewiseLinear:
    """Explicit breakpoint table ``edge -> ((x0, p0), (x1, p1), ...)``.

    Each payment is the linear interpolation of its table and constant after
    the last point.  Edges missing from the table are never paid.
    """

    table: Mapping[EdgeId, tuple[tuple[Fraction, Fraction], ...]]

    kind = "piecewise"

    def __post_init__(self):
        clean = {}
        for e, pts in dict(self.table).items():
            clean[e] = tuple((to_q(x), to_q(p)) for x, p in pts)
        object.__setattr__(self, "table", clean)

    @staticmethod
    def _interp(pts, u):
        if not pts:
            return ZERO
        if u >= pts[-1][0]:
            return pts[-1][1]
        j = bisect.bisect_right([x for x, _ in pts], u) - 1
        if j < 0:
            return ZERO
        (x0, p0), (x1, p1) = pts[j], pts[j + 1]
        return p0 + (p1 - p0) * (u - x0) / (x1 - x0)

    def pay(self, u, edges, claims):
        return [self._interp(self.table.get(e, ()), u) for e in edges]

    def breakpoints(self, edges, claims):
        xs = {ZERO}
        for e in edges:
            xs.update(x for x, _ in self.table.get(e, ()))
        return sorted(xs)

    def slopes(self, u, edges, claims, right=True):
        out = []
        for e in edges:
            pts = self.table.get(e, ())
            s = ZERO
            for (x0, p0), (x1, p1) in zip(pts, pts[1:]):
                if (x0 <= u < x1) if right else (x0 < u <= x1):
                    s = (p1 - p0) / (x1 - x0)
                    break
            out.append(s)
        return out

    def validate(self, edges, claims) -> list[str]:
        problems = []
        for e in self.table:
            if e not in edges:
                problems.append(f"table mentions foreign edge {e}")
        total = sum(claims, ZERO)
        for e, c in zip(edges, claims):
            pts = self.table.get(e, ())
            if not pts:
                if c > 0:
                    problems.append(f"no table for claimed edge {e}")
                continue
            if pts[0] != (ZERO, ZERO):
                problems.append(f"table for {e} must start at (0, 0)")
            for (x0, p0), (x1, p1) in zip(pts, pts[1:]):
                if x1 <= x0:
                    problems.append(f"table for {e} has non-increasing x")
                if p1 < p0:
                    problems.append(f"table for {e} is not monotone")
            if pts[-1][1] != c:
                problems.append(f"table for {e} ends at {pts[-1][1]}, claim is {c}")
        if problems:
            return problems
        for x in self.breakpoints(edges, claims) + [total]:
            paid = sum(self.pay(x, edges, claims), ZERO)
            if paid != min(x, total):
                problems.append(f"pays {paid} at cash {x}, expected {min(x, total)}")
                break
        return problems

    def rekey(self, mapping):
        return PiecewiseLinear({mapping[e]: pts for e, pts in self.table.items()})


PaymentRule = Ranking | Proportional | PiecewiseLinear


def reduce_rule(rule: PaymentRule, edges, claims, cash):
    """Truncate ``rule`` to the claims it has paid at ``cash``.

    Returns ``(reduced_rule, reduced_claims)`` such that the reduced rule
    pays exactly like ``rule`` on ``[0, cash]``.
    """
    reduced = tuple(rule.pay(cash, edges, claims))
    if isinstance(rule, (Ranking, Proportional)):
        return rule, reduced
    table = {}
    for e in edges:
        pts = [pt for pt in rule.table.get(e, ()) if pt[0] < cash]
        if pts:
            pts.append((cash, PiecewiseLinear._interp(rule.table[e], cash)))
            table[e] = tuple(pts)
    return PiecewiseLinear(table), reduced


def portable_rule(rule: PaymentRule, edges) -> PaymentRule:
    """A rule of the same family that is valid for any claim vector.

    Ranking and proportional rules do not depend on the claims; explicit
    tables do, so those fall back to ranking in edge order.
    """
    if isinstance(rule, PiecewiseLinear):
        return Ranking(tuple(edges))
    return rule


def ranking_family(order) -> Callable[[Sequence], PaymentRule]:
    order = tuple(order)
    return lambda claims: Ranking(order)


def proportional_family() -> Callable[[Sequence], PaymentRule]:
    return lambda claims: Proportional()


# -- threshold strategies ------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdStrategy:
    """Threshold strategy of one bank over its outgoing edges.

    ``thresholds[i][j]`` is tau^(i+1) of ``edges[j]``; ``rules`` has one more
    entry than ``thresholds``.  ``weights`` are the edge weights c_e, stored so
    the strategy can be evaluated on its own.
    """

    owner: NodeId
    edges: tuple[EdgeId, ...]
    weights: tuple[Fraction, ...]
    thresholds: tuple[tuple[Fraction, ...], ...]
    rules: tuple[PaymentRule, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "weights", tuple(to_q(w) for w in self.weights))
        object.__setattr__(
            self, "thresholds", tuple(tuple(to_q(t) for t in row) for row in self.thresholds)
        )
        object.__setattr__(self, "rules", tuple(self.rules))

    # constructors

    @classmethod
    def levels(cls, net: Network, v: NodeId, taus: Sequence[Mapping], rules: Sequence[PaymentRule]):
        """General constructor from threshold dicts (missing edges read as 0)."""
        es = net.out_edges(v)
        rows = tuple(tuple(to_q(t.get(e.id, 0)) for e in es) for t in taus)
        return cls(v, tuple(e.id for e in es), tuple(e.weight for e in es), rows, tuple(rules))

    @classmethod
    def ranking(cls, net: Network, v: NodeId, order: Sequence[EdgeId] | None = None):
        es = net.out_edges(v)
        order = tuple(order) if order is not None else tuple(e.id for e in es)
        return cls.levels(net, v, (), (Ranking(order),))

    @classmethod
    def proportional(cls, net: Network, v: NodeId):
        return cls.levels(net, v, (), (Proportional(),))

    @classmethod
    def partition(cls, net: Network, v: NodeId, classes: Sequence[Sequence[EdgeId]], rule="ranking"):
        """Priority partition: pay ``classes[0]`` in full, then ``classes[1]``, ...

        ``rule`` is "ranking" (within a class, in the listed order) or
        "proportional".
        """
        es = net.out_edges(v)
        level_of = {}
        for i, cl in enumerate(classes):
            for eid in cl:
                level_of[eid] = i
        missing = [e.id for e in es if e.id not in level_of]
        if missing:
            raise InvalidProfile(f"partition for {v} misses edges {missing}")
        taus = []
        for i in range(len(classes) - 1):
            taus.append({e.id: (e.weight if level_of[e.id] <= i else 0) for e in es})
        rules = []
        for i, cl in enumerate(classes):
            if rule == "proportional":
                rules.append(Proportional())
            else:
                rest = [e.id for e in es if e.id not in cl]
                rules.append(Ranking(tuple(cl) + tuple(rest)))
        return cls.levels(net, v, taus, rules)

    @classmethod
    def seniority(cls, net: Network, v: NodeId, within: Mapping[int, Sequence[EdgeId]] | None = None,
                  rule="ranking"):
        """Partition strategy following the fixed seniority labels of ``v``.

        ``within`` optionally fixes the order inside individual classes.
        """
        classes: dict[int, list[EdgeId]] = {}
        for e in net.out_edges(v):
            classes.setdefault(e.seniority, []).append(e.id)
        ordered = []
        for s in sorted(classes):
            cl = classes[s]
            if within and s in within:
                cl = list(within[s])
            ordered.append(cl)
        return cls.partition(net, v, ordered, rule=rule)

    # derived quantities

    @property
    def k(self) -> int:
        return len(self.rules)

    @cached_property
    def full_thresholds(self) -> tuple[tuple[Fraction, ...], ...]:
        """tau^(0) .. tau^(k): zeros, the given vectors, then the weights."""
        zero = tuple(ZERO for _ in self.edges)
        return (zero,) + self.thresholds + (self.weights,)

    @cached_property
    def claims(self) -> tuple[tuple[Fraction, ...], ...]:
        ft = self.full_thresholds
        return tuple(
            tuple(hi - lo for hi, lo in zip(ft[i + 1], ft[i])) for i in range(len(ft) - 1)
        )

    @cached_property
    def cumulative(self) -> tuple[Fraction, ...]:
        """T^(0) .. T^(k)."""
        return tuple(sum(row, ZERO) for row in self.full_thresholds)

    @cached_property
    def breakpoints(self) -> tuple[Fraction, ...]:
        T = self.cumulative
        pts = {ZERO}
        for i, rule in enumerate(self.rules):
            t = T[i + 1] - T[i]
            if t <= 0:
                continue
            for bp in rule.breakpoints(self.edges, self.claims[i]):
                if 0 <= bp <= t:
                    pts.add(T[i] + bp)
            pts.add(T[i + 1])
        return tuple(sorted(pts))

    @property
    def total(self) -> Fraction:
        return self.cumulative[-1]

    def evaluate(self, x) -> list:
        """Payments per edge (aligned with ``edges``) at total assets ``x``."""
        T = self.cumulative
        out = [ZERO] * len(self.edges)
        for i, rule in enumerate(self.rules):
            u = x - T[i]
            if u <= 0:
                break
            t = T[i + 1] - T[i]
            if t <= 0:
                continue
            part = rule.pay(u if u < t else t, self.edges, self.claims[i])
            out = [a + p for a, p in zip(out, part)]
        return out

    def slopes(self, x, right=True) -> list:
        T = self.cumulative
        for i, rule in enumerate(self.rules):
            t = T[i + 1] - T[i]
            if t <= 0:
                continue
            if (T[i] <= x < T[i + 1]) if right else (T[i] < x <= T[i + 1]):
                return rule.slopes(x - T[i], self.edges, self.claims[i], right=right)
        return [ZERO] * len(self.edges)

    def next_breakpoint(self, x):
        bps = self.breakpoints
        j = bisect.bisect_right(bps, x)
        return bps[j] if j < len(bps) else None

    def prev_breakpoint(self, x):
        bps = self.breakpoints
        j = bisect.bisect_left(bps, x) - 1
        return bps[j] if j >= 0 else None

    def is_partition(self) -> bool:
        return all(t in (ZERO, w) for row in self.thresholds for t, w in zip(row, self.weights))

    def edge_levels(self) -> dict[EdgeId, list[int]]:
        """For each edge, the (1-based) levels in which it has a positive claim."""
        out = {e: [] for e in self.edges}
        for i, row in enumerate(self.claims):
            for e, c in zip(self.edges, row):
                if c > 0:
                    out[e].append(i + 1)
        return out


StrategyProfile = Mapping[NodeId, ThresholdStrategy]


def evaluate_strategy(s: ThresholdStrategy, x) -> dict[EdgeId, Fraction]:
    problems = strategy_violations(s)
    if problems:
        raise InvalidProfile("; ".join(problems))
    if x < 0:
        raise ValueError("cash must be nonnegative")
    return dict(zip(s.edges, s.evaluate(x)))


def strategy_violations(s: ThresholdStrategy) -> list[str]:
    """Checks that need only the strategy itself."""
    out = []
    if s.k < 1:
        return ["strategy needs at least one payment rule"]
    if len(s.thresholds) != s.k - 1:
        return [f"{s.k} rules need {s.k - 1} threshold vectors, got {len(s.thresholds)}"]
    n = len(s.edges)
    if len(s.weights) != n or any(len(row) != n for row in s.thresholds):
        return ["threshold vectors are not aligned with the edge list"]
    for row in s.full_thresholds:
        if any(t < 0 for t in row):
            out.append("negative threshold")
            break
    for i, row in enumerate(s.claims):
        if any(c < 0 for c in row):
            out.append(f"thresholds decrease or exceed weights at level {i + 1}")
    if out:
        return out
    for i, rule in enumerate(s.rules):
        for msg in rule.validate(s.edges, s.claims[i]):
            out.append(f"level {i + 1}: {msg}")
    return out


def validate_profile(net: Network, prof: StrategyProfile) -> list[Violation]:
    out: list[Violation] = []
    for v, s in prof.items():
        subj = f"node {v}"
        if v not in net.node_index:
            out.append(Violation(subj, "strategy for unknown node"))
            continue
        if s.owner != v:
            out.append(Violation(subj, f"strategy owner is {s.owner}"))
        es = net.out_edges(v)
        if tuple(e.id for e in es) != s.edges or tuple(e.weight for e in es) != s.weights:
            out.append(Violation(subj, "strategy edges/weights do not match the network"))
            continue
        for msg in strategy_violations(s):
            out.append(Violation(subj, msg))
        if net.has_fixed_seniority(v) and not strategy_violations(s):
            out.extend(_seniority_violations(net, v, s))
    for v in net.debtors():
        if v not in prof:
            out.append(Violation(f"node {v}", "has liabilities but no strategy"))
    return out


def _seniority_violations(net, v, s) -> list[Violation]:
    subj = f"node {v}"
    if not s.is_partition():
        return [Violation(subj, "fixed seniorities require a partition strategy")]
    levels = s.edge_levels()
    out = []
    es = net.out_edges(v)
    for e in es:
        if len(levels[e.id]) != 1:
            out.append(Violation(subj, f"edge {e.id} is not assigned to a single priority class"))
    if out:
        return out
    for e in es:
        for g in es:
            se, sg = e.seniority, g.seniority
            le, lg = levels[e.id][0], levels[g.id][0]
            if (se < sg and not le < lg) or (se == sg and le != lg):
                out.append(
                    Violation(subj, f"edges {e.id} (seniority {se}) and {g.id} (seniority {sg}) "
                                    f"are paid at levels {le} and {lg}")
                )
    return out


def check_profile(net: Network, prof: StrategyProfile) -> None:
    problems = validate_profile(net, prof)
    if problems:
        raise InvalidProfile("; ".join(map(str, problems[:5])))


def default_strategy(net: Network, v: NodeId) -> ThresholdStrategy:
    """Seniority partition if ``v`` has fixed labels, else ranking in edge order."""
    if net.has_fixed_seniority(v):
        return ThresholdStrategy.seniority(net, v)
    return ThresholdStrategy.ranking(net, v)


def default_profile(net: Network, overrides: Mapping[NodeId, ThresholdStrategy] | None = None) -> dict:
    prof = {v: default_strategy(net, v) for v in net.debtors()}
    if overrides:
        prof.update(overrides)
    return prof


# -- auxiliary-edge expansion ---------------------------------------------------------


@dataclass(frozen=True)
class Expansion:
    network: Network
    profile: dict
    origin: dict = field(default_factory=dict)  # aux edge id -> original edge id

    def collapse(self, flow: Mapping[EdgeId, Fraction], original: Network):
        """Sum auxiliary flows back onto the original edges."""
        from .model import FlowState

        out = {e.id: ZERO for e in original.edges}
        for aux, val in flow.items():
            out[self.origin[aux]] += val
        return FlowState(original, out)

    def lift(self, flow) -> "dict[EdgeId, Fraction]":
        """Split an original flow into auxiliary flows, level by level.

        A feasible flow pays each edge its installments in level order, so
        the split is the unique one consistent with the thresholds.
        """
        out = {}
        parts: dict[EdgeId, list[EdgeId]] = {}
        for aux, orig in self.origin.items():
            parts.setdefault(orig, []).append(aux)
        for orig, auxes in parts.items():
            rem = flow[orig]
            for aux in auxes:
                w = self.network.edge(aux).weight
                p = min(rem, w)
                out[aux] = p
                rem -= p
        return out


def expand_to_partition(net: Network, prof: StrategyProfile) -> Expansion:
    """Replace every edge by one auxiliary edge per level with a positive installment.

    The expanded profile is a partition strategy per bank whose level-i rule
    is the original level-i rule re-keyed to the level-i auxiliary edges.
    Edges with a single installment keep their id.
    """
    check_profile(net, prof)
    new_edges = []
    origin: dict[EdgeId, EdgeId] = {}
    aux_of: dict[tuple[EdgeId, int], EdgeId] = {}
    for e in net.edges:
        s = prof.get(e.src)
        j = s.edges.index(e.id)
        parts = [(i, row[j]) for i, row in enumerate(s.claims) if row[j] > 0]
        for i, c in parts:
            aid = e.id if len(parts) == 1 else f"{e.id}#L{i + 1}"
            new_edges.append((aid, e.src, e.dst, c, i))
            origin[aid] = e.id
            aux_of[(e.id, i)] = aid
    # group auxiliary edges by source so that level order equals edge order
    from .model import Edge

    by_src: dict[NodeId, list] = {}
    for item in new_edges:
        by_src.setdefault(item[1], []).append(item)
    ordered = []
    for v in net.nodes:
        ordered.extend(sorted(by_src.get(v, []), key=lambda it: it[4]))
    expanded = Network(
        net.nodes,
        tuple(Edge(aid, src, dst, w) for aid, src, dst, w, _ in ordered),
        dict(net.external_assets),
    )
    new_prof = {}
    for v, s in prof.items():
        out_aux = [it for it in ordered if it[1] == v]
        aux_ids = [it[0] for it in out_aux]
        level_classes = []
        rules = []
        for i, rule in enumerate(s.rules):
            mapping = {e: aux_of[(e, i)] for e in s.edges if (e, i) in aux_of}
            cls_ids = [mapping[e] for e in s.edges if e in mapping]
            if not cls_ids:
                continue
            level_classes.append(cls_ids)
            if isinstance(rule, Ranking):
                order = [mapping[e] for e in rule.order if e in mapping]
                rest = [a for a in aux_ids if a not in order]
                rules.append(Ranking(tuple(order + rest)))
            elif isinstance(rule, PiecewiseLinear):
                rules.append(PiecewiseLinear({mapping[e]: pts for e, pts in rule.table.items()
                                              if e in mapping}))
            else:
                rules.append(rule)
        taus = []
        for i in range(len(level_classes) - 1):
            done = {a for cl in level_classes[: i + 1] for a in cl}
            taus.append({a: expanded.edge(a).weight for a in done})
        new_prof[v] = ThresholdStrategy.levels(expanded, v, taus, rules)
    return Expansion(expanded, new_prof, origin)
