"""Coalitional improvement dynamics and strong-equilibrium certificates.

Both modes look for a cycle of unsaturated edges in the current clearing
state and let the banks on it jointly push ``delta`` more money around it,
where ``delta`` is the smallest residual capacity on the cycle.

* max clearing: the members switch to two-level strategies whose first
  level pays the current flow plus ``delta`` on the cycle edge;
* min clearing: the members first split their strategy at the current flow
  (a "freeze" profile that must reproduce the same clearing state) and then
  prepend a level that pays ``delta`` on the cycle edge before anything else.
  Only cycles through a bank with positive assets qualify, since a cycle
  without money on it cannot be started from below.

Either way at least one more edge becomes saturated, so a run ends after at
most ``|E|`` steps with a cycle-free certificate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, NamedTuple, Sequence

from .clearing import ClearingResult, EngineConfig, clearing
from .errors import FlowNotClearing, NonConvergence, RuleNotReductionConsistent
from .model import EdgeId, FlowState, Network, NodeId
from .strategies import (
    PaymentRule,
    Proportional,
    Ranking,
    StrategyProfile,
    ThresholdStrategy,
    portable_rule,
    reduce_rule,
)

ZERO = Fraction(0)
Mode = Literal["min", "max"]


def _tol(result: ClearingResult, cfg: EngineConfig) -> Fraction:
    """Saturation tolerance: zero for exact flows, loose for iterated ones."""
    if result.method == "exact":
        return ZERO
    return max(Fraction(1, 10**7), 100 * cfg.tolerance)


# -- residual cycles ---------------------------------------------------------------------


def find_residual_cycle(net: Network, flow: FlowState, require_positive_utility_node: bool = False,
                        tol=0) -> list[EdgeId] | None:
    """First simple cycle of unsaturated edges, searched deterministically.

    Anchors are tried in node order (restricted to banks with positive assets
    when the flag is set); from each anchor a depth-first search follows
    unsaturated edges in edge order until it returns to the anchor.
    """
    tol = Fraction(tol)
    open_out = {v: [e for e in net.out_edges(v) if e.weight - flow[e.id] > tol] for v in net.nodes}
    for anchor in net.nodes:
        if require_positive_utility_node and flow.assets(anchor) <= tol:
            continue
        path: list = []
        visited = {anchor}
        stack = [iter(open_out[anchor])]
        while stack:
            e = next(stack[-1], None)
            if e is None:
                stack.pop()
                if path:
                    path.pop()
                continue
            if e.dst == anchor:
                return [x.id for x in path] + [e.id]
            if e.dst in visited:
                continue
            visited.add(e.dst)
            path.append(e)
            stack.append(iter(open_out[e.dst]))
    return None


@dataclass(frozen=True)
class SECertificate:
    """No qualifying residual cycle exists in ``checked_flow``.

    For max clearing any unsaturated cycle disqualifies; for min clearing
    only cycles through a bank with positive assets do.
    """

    mode: Mode
    checked_flow: FlowState
    tol: Fraction = ZERO

    @property
    def witness(self) -> str:
        if self.mode == "max":
            return "no cycle of unsaturated edges"
        return "no cycle of unsaturated edges through a bank with positive assets"

    def recheck(self) -> bool:
        net = self.checked_flow.net
        return find_residual_cycle(net, self.checked_flow, self.mode == "min", self.tol) is None

    def to_json(self) -> dict:
        return {"certified": True, "mode": self.mode, "witness": self.witness}


def verify_strong_equilibrium(net: Network, prof: StrategyProfile, mode: Mode,
                              cfg: EngineConfig | None = None) -> SECertificate | None:
    """Certificate if the clearing state has no qualifying residual cycle.

    This is a sufficient condition only; ``None`` means "not certified".
    """
    cfg = cfg or EngineConfig()
    res = clearing(net, prof, mode, cfg)
    tol = _tol(res, cfg)
    if find_residual_cycle(net, res.flow, mode == "min", tol) is None:
        return SECertificate(mode, res.flow, tol)
    return None


# -- improvement steps -------------------------------------------------------------------


@dataclass(frozen=True)
class ImprovementStep:
    mode: Mode
    coalition: tuple[NodeId, ...]
    cycle: tuple[EdgeId, ...]
    delta: Fraction
    old_profile: dict = field(repr=False)
    new_profile: dict = field(repr=False)
    old_flow: FlowState = field(repr=False)
    new_flow: FlowState = field(repr=False)
    freeze_profile: dict | None = field(default=None, repr=False)

    def utility_change(self) -> dict[NodeId, tuple[Fraction, Fraction]]:
        return {v: (self.old_flow.assets(v), self.new_flow.assets(v)) for v in self.coalition}

    def violations(self, tol=0) -> list[str]:
        out = []
        for v, (before, after) in self.utility_change().items():
            if not after > before + tol:
                out.append(f"member {v} does not gain ({before} -> {after})")
        if not self.old_flow.leq(self.new_flow, tol):
            out.append("new flow does not dominate the old one")
        if len(self.new_flow.saturated(tol)) <= len(self.old_flow.saturated(tol)):
            out.append("no additional edge saturated")
        return out

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "coalition": list(self.coalition),
            "cycle": list(self.cycle),
            "delta": str(self.delta),
            "utilities": {v: {"before": str(a), "after": str(b)}
                          for v, (a, b) in self.utility_change().items()},
        }


def trace_lines(steps: Sequence[ImprovementStep]) -> str:
    """JSON-lines step log."""
    return "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in steps)


def _cycle_parts(net, cycle):
    out_edge = {}
    for eid in cycle:
        out_edge[net.edge(eid).src] = eid
    coalition = tuple(net.edge(eid).src for eid in cycle)
    return coalition, out_edge


def _require_clearing(net, prof, flow, mode, cfg):
    res = clearing(net, prof, mode, cfg)
    tol = _tol(res, cfg)
    if any(abs(res.flow[k] - flow[k]) > tol for k in flow.flows):
        raise FlowNotClearing(f"given flow is not the {mode} clearing state of the profile")
    return res, tol


def _family_rule(rule: PaymentRule, edges) -> PaymentRule:
    """Rule of the same family as ``rule`` that works for any claims."""
    if isinstance(rule, Proportional):
        return Proportional()
    if isinstance(rule, Ranking):
        return rule
    return Ranking(tuple(edges))


def improvement_step_max(net: Network, prof: StrategyProfile, flow: FlowState,
                         cfg: EngineConfig | None = None) -> ImprovementStep | None:
    cfg = cfg or EngineConfig()
    res, tol = _require_clearing(net, prof, flow, "max", cfg)
    flow = res.flow
    cycle = find_residual_cycle(net, flow, False, tol)
    if cycle is None:
        return None
    delta = min(flow.residual(eid) for eid in cycle)
    coalition, out_edge = _cycle_parts(net, cycle)
    new_prof = dict(prof)
    for v in coalition:
        s = prof[v]
        rule = _family_rule(s.rules[0], s.edges)
        tau = {e: flow[e] for e in s.edges}
        tau[out_edge[v]] += delta
        new_prof[v] = ThresholdStrategy.levels(net, v, [tau], [rule, rule])
    new = clearing(net, new_prof, "max", cfg).flow
    step = ImprovementStep("max", coalition, tuple(cycle), delta, dict(prof), new_prof, flow, new)
    problems = step.violations(tol)
    if problems:
        raise AssertionError("; ".join(problems))
    return step


def freeze_strategy(s: ThresholdStrategy, flow: FlowState, family=None) -> ThresholdStrategy:
    """Split ``s`` at the payments it currently makes.

    The level containing the current cash is cut in two: the lower part is
    the reduced rule (so payments up to the current cash are unchanged), the
    upper part pays the rest of that level.  ``family`` optionally maps a
    claim vector to a rule; it then has to reproduce the original payments.
    """
    f = [flow[e] for e in s.edges]
    ft = s.full_thresholds
    level = next(i for i in range(1, s.k + 1) if all(x <= t for x, t in zip(f, ft[i])))
    lo, hi = ft[level - 1], ft[level]
    rule = s.rules[level - 1]
    cash = sum(f, ZERO) - sum(lo, ZERO)
    claims = s.claims[level - 1]
    reduced, reduced_claims = reduce_rule(rule, s.edges, claims, cash)
    if family is not None:
        candidate = family(reduced_claims)
        if check_reduction_consistency(family, claims, [cash], edges=s.edges).ok:
            reduced = candidate
        else:
            raise RuleNotReductionConsistent(f"family of {s.owner} does not reduce at cash {cash}")
    upper = family(tuple(h - x for h, x in zip(hi, f))) if family is not None \
        else portable_rule(rule, s.edges)
    thresholds = list(s.thresholds[: level - 1]) + [tuple(f)] + list(s.thresholds[level - 1:])
    rules = list(s.rules[: level - 1]) + [reduced, upper] + list(s.rules[level:])
    return ThresholdStrategy(s.owner, s.edges, s.weights, tuple(thresholds), tuple(rules))


def raise_strategy(s: ThresholdStrategy, eid: EdgeId, delta: Fraction) -> ThresholdStrategy:
    """Prepend a level paying ``delta`` on ``eid`` and shift that edge's thresholds up."""
    j = s.edges.index(eid)
    w = s.weights[j]
    first = tuple(delta if i == j else ZERO for i in range(len(s.edges)))
    shifted = []
    for row in s.thresholds:
        row = list(row)
        row[j] = min(row[j] + delta, w)
        shifted.append(tuple(row))
    thresholds = [first] + shifted
    out = ThresholdStrategy(s.owner, s.edges, s.weights, tuple(thresholds), (Ranking(s.edges),) + s.rules)
    # capped levels changed their claims; explicit tables must be replaced
    rules = list(out.rules)
    for i in range(1, out.k):
        if out.claims[i] != s.claims[i - 1]:
            rules[i] = portable_rule(rules[i], s.edges)
    return ThresholdStrategy(s.owner, s.edges, s.weights, tuple(thresholds), tuple(rules))


def improvement_step_min(net: Network, prof: StrategyProfile, flow: FlowState,
                         cfg: EngineConfig | None = None,
                         families: dict[NodeId, Callable] | None = None) -> ImprovementStep | None:
    """Two-stage step for min clearing: freeze the current flow, then raise the cycle."""
    cfg = cfg or EngineConfig()
    res, tol = _require_clearing(net, prof, flow, "min", cfg)
    flow = res.flow
    cycle = find_residual_cycle(net, flow, True, tol)
    if cycle is None:
        return None
    delta = min(flow.residual(eid) for eid in cycle)
    coalition, out_edge = _cycle_parts(net, cycle)
    families = families or {}

    freeze = dict(prof)
    for v in coalition:
        freeze[v] = freeze_strategy(prof[v], flow, families.get(v))
    frozen = clearing(net, freeze, "min", cfg).flow
    if frozen.distance(flow) > tol:
        raise AssertionError("freeze profile changed the clearing state")

    new_prof = dict(freeze)
    for v in coalition:
        new_prof[v] = raise_strategy(freeze[v], out_edge[v], delta)
    new = clearing(net, new_prof, "min", cfg).flow
    step = ImprovementStep("min", coalition, tuple(cycle), delta, dict(prof), new_prof, flow, new, freeze)
    problems = step.violations(tol)
    on_cycle = set(cycle)
    for k in flow.flows:
        want = flow[k] + (delta if k in on_cycle else 0)
        if abs(new[k] - want) > tol:
            problems.append(f"edge {k} carries {new[k]}, expected {want}")
    if problems:
        raise AssertionError("; ".join(problems))
    return step


class DynamicsRun(NamedTuple):
    steps: list
    profile: dict
    certificate: SECertificate


def run_dynamics(net: Network, initial_prof: StrategyProfile, mode: Mode,
                 cfg: EngineConfig | None = None, max_steps: int | None = None,
                 families: dict | None = None) -> DynamicsRun:
    """Apply improvement steps until a strong-equilibrium certificate exists."""
    cfg = cfg or EngineConfig()
    prof = dict(initial_prof)
    steps: list[ImprovementStep] = []
    bound = len(net.edges)
    while True:
        res = clearing(net, prof, mode, cfg)
        if mode == "max":
            step = improvement_step_max(net, prof, res.flow, cfg)
        else:
            step = improvement_step_min(net, prof, res.flow, cfg, families)
        if step is None:
            return DynamicsRun(steps, prof, SECertificate(mode, res.flow, _tol(res, cfg)))
        steps.append(step)
        prof = step.new_profile
        if len(steps) > bound:
            raise AssertionError(f"more than |E| = {bound} improvement steps")
        if max_steps is not None and len(steps) >= max_steps:
            final = clearing(net, prof, mode, cfg)
            cert = SECertificate(mode, final.flow, _tol(final, cfg))
            if not cert.recheck():
                raise NonConvergence(f"stopped after {max_steps} steps without reaching equilibrium",
                                     iterations=len(steps), residual=None)
            return DynamicsRun(steps, prof, cert)


# -- reduction consistency ------------------------------------------------------------------


class ReductionCheck(NamedTuple):
    ok: bool
    witness: tuple | None = None  # (T_hat, x, edge, original payment, reduced payment)


def check_reduction_consistency(family: Callable[[Sequence], PaymentRule], claims: Sequence,
                                samples: Sequence, edges: Sequence | None = None,
                                grid: int = 16) -> ReductionCheck:
    """Check that ``family`` reproduces its own payments after truncation.

    For every sampled cash level ``T_hat`` the claims are reduced to what the
    rule pays at ``T_hat``; the family's rule for the reduced claims must pay
    exactly the same on ``[0, T_hat]``.  Both rules are piecewise linear, so
    comparing at the union of their breakpoints (plus a uniform grid) is
    conclusive.
    """
    claims = tuple(Fraction(c) for c in claims)
    edges = tuple(edges) if edges is not None else tuple(range(len(claims)))
    rule = family(claims)
    for t_hat in samples:
        t_hat = Fraction(t_hat)
        reduced_claims = tuple(rule.pay(t_hat, edges, claims))
        reduced = family(reduced_claims)
        xs = set(rule.breakpoints(edges, claims)) | set(reduced.breakpoints(edges, reduced_claims))
        xs |= {t_hat * j / grid for j in range(grid + 1)}
        for x in sorted(x for x in xs if 0 <= x <= t_hat):
            a = rule.pay(x, edges, claims)
            b = reduced.pay(x, edges, reduced_claims)
            for e, pa, pb in zip(edges, a, b):
                if pa != pb:
                    return ReductionCheck(False, (t_hat, x, e, pa, pb))
    return ReductionCheck(True)
