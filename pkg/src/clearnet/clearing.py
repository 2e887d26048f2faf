"""Minimal and maximal clearing states.

The payment map sends a vector of bank assets ``y`` to
``G(y)_w = b_w + sum of a_e(y_src) over edges e into w``; clearing states are
its fixed points and the flows are read off as ``f_e = a_e(y_src)``.  All
payment functions are monotone and piecewise linear, so ``G`` is too.

The exact solver walks from ``b`` upward (or from ``b + c^-`` downward)
through the linear pieces of ``G``.  Inside one piece it solves the linear
fixed-point problem directly instead of iterating, stopping early at the
first breakpoint any bank reaches.  Every piece is entered at most once per
bank and breakpoint, so the walk is finite and the result is exact.

Kleene iteration is kept for proportional rules (where the spec'd default is
a tolerance-controlled float iteration) and as an independent cross-check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import networkx as nx

from .errors import EnumerationTooLarge, NonConvergence
from .model import FlowState, Network, enum_cap, to_q
from .strategies import Proportional, StrategyProfile, check_profile

ZERO = Fraction(0)
ONE = Fraction(1)

Mode = Literal["min", "max"]


@dataclass(frozen=True)
class EngineConfig:
    tolerance: Fraction = Fraction(1, 10**9)
    max_iterations: int = 1_000_000
    method: Literal["auto", "exact", "kleene"] = "auto"

    def __post_init__(self):
        object.__setattr__(self, "tolerance", to_q(self.tolerance))
        if self.method not in ("auto", "exact", "kleene"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class ClearingResult:
    flow: FlowState
    mode: Mode
    method: Literal["exact", "kleene"]
    iterations: int
    residual_gap: Fraction = ZERO
    assets: dict = field(default_factory=dict, compare=False, repr=False)


def uses_proportional(prof: StrategyProfile) -> bool:
    return any(isinstance(r, Proportional) for s in prof.values() for r in s.rules)


def payments(net: Network, prof: StrategyProfile, assets) -> dict:
    """Edge payments when every bank pays according to ``assets``."""
    out = {}
    for v, s in prof.items():
        for eid, p in zip(s.edges, s.evaluate(assets[v])):
            out[eid] = p
    for e in net.edges:
        out.setdefault(e.id, ZERO)
    return out


def is_feasible_flow(net: Network, prof: StrategyProfile, f: FlowState, tol=0) -> bool:
    check_profile(net, prof)
    tol = to_q(tol)
    assets = {v: f.assets(v) for v in net.nodes}
    target = payments(net, prof, assets)
    return all(abs(f[e.id] - target[e.id]) <= tol for e in net.edges)


def min_clearing(net: Network, prof: StrategyProfile, cfg: EngineConfig | None = None) -> ClearingResult:
    return _clear(net, prof, cfg or EngineConfig(), "min")


def max_clearing(net: Network, prof: StrategyProfile, cfg: EngineConfig | None = None) -> ClearingResult:
    return _clear(net, prof, cfg or EngineConfig(), "max")


def clearing(net, prof, mode: Mode, cfg: EngineConfig | None = None) -> ClearingResult:
    return _clear(net, prof, cfg or EngineConfig(), mode)


def _clear(net, prof, cfg, mode):
    check_profile(net, prof)
    method = cfg.method
    if method == "auto":
        method = "kleene" if uses_proportional(prof) else "exact"
    if method == "exact":
        return _exact(net, prof, mode)
    return _kleene(net, prof, cfg, mode)


# -- exact piecewise-linear walk --------------------------------------------------------


def _solve(a: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals; ``a`` must be nonsingular."""
    n = len(rhs)
    m = [row[:] + [rhs[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        if p != 1:
            m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def _stationary(members, jac) -> dict:
    """Positive vector p with J p = p on a closed class, normalised to sum 1."""
    n = len(members)
    a = [[(jac.get((w, v), ZERO) - (ONE if v == w else ZERO)) for v in members] for w in members]
    rhs = [ZERO] * n
    a[-1] = [ONE] * n
    rhs[-1] = ONE
    sol = _solve(a, rhs)
    return dict(zip(members, sol))


def _exact(net: Network, prof: StrategyProfile, mode: Mode) -> ClearingResult:
    upward = mode == "min"
    nodes = net.nodes
    y = {v: net.b(v) + (ZERO if upward else net.total_claims(v)) for v in nodes}
    steps = 0
    while True:
        steps += 1
        pay = payments(net, prof, y)
        g = {v: net.b(v) for v in nodes}
        for e in net.edges:
            g[e.dst] += pay[e.id]
        r = {v: (g[v] - y[v]) if upward else (y[v] - g[v]) for v in nodes}
        if all(x == 0 for x in r.values()):
            break
        # Jacobian of G along the walking direction: jac[(w, v)] = dG_w / dy_v
        jac: dict = {}
        graph = nx.DiGraph()
        graph.add_nodes_from(nodes)
        for v, s in prof.items():
            for eid, sl in zip(s.edges, s.slopes(y[v], right=upward)):
                if sl:
                    w = net.edge(eid).dst
                    jac[(w, v)] = jac.get((w, v), ZERO) + sl
                    graph.add_edge(v, w)
        sources = [v for v in nodes if r[v] > 0]
        reach = set(sources)
        for v in sources:
            reach |= nx.descendants(graph, v)
        sub = graph.subgraph(reach)
        cond = nx.condensation(sub)
        order = list(nx.topological_sort(cond))
        classes = [sorted(cond.nodes[c]["members"], key=net.node_index.get) for c in order]

        closed = [
            members for members in classes
            if len(members) > 1
            and all(sum((jac.get((w, v), ZERO) for w in members), ZERO) == 1 for v in members)
        ]

        d: dict = {v: ZERO for v in nodes}
        if closed:
            # money circulating in a closed class grows without bound until a breakpoint
            for members in closed:
                d.update(_stationary(members, jac))
            cap = None
        else:
            for members in classes:
                idx = {v: i for i, v in enumerate(members)}
                rhs = []
                for w in members:
                    val = r[w]
                    for (ww, v), sl in jac.items():
                        if ww == w and v not in idx:
                            val += sl * d[v]
                    rhs.append(val)
                a = [[(ONE if v == w else ZERO) - jac.get((w, v), ZERO) for v in members]
                     for w in members]
                sol = _solve(a, rhs) if len(members) > 1 else [rhs[0] / a[0][0]]
                for v, x in zip(members, sol):
                    d[v] = x
            cap = ONE
        t = cap
        for v, dv in d.items():
            if dv <= 0 or v not in prof:
                continue
            s = prof[v]
            bp = s.next_breakpoint(y[v]) if upward else s.prev_breakpoint(y[v])
            if bp is None:
                continue
            room = (bp - y[v]) / dv if upward else (y[v] - bp) / dv
            if t is None or room < t:
                t = room
        if t is None:
            # unbounded growth is impossible: a closed class always meets its breakpoints
            raise AssertionError("closed class without breakpoints")
        for v, dv in d.items():
            if dv:
                y[v] = y[v] + t * dv if upward else y[v] - t * dv
    flow = FlowState(net, payments(net, prof, y))
    return ClearingResult(flow, mode, "exact", steps, ZERO, assets=dict(y))


# -- Kleene iteration ----------------------------------------------------------------------


def _to_exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(10**12)


def kleene(net: Network, prof: StrategyProfile, mode: Mode, cfg: EngineConfig | None = None,
           exact: bool | None = None) -> ClearingResult:
    """Plain fixed-point iteration of the payment map from the bottom or top.

    ``exact`` selects Fraction arithmetic (default: only without proportional
    rules).  Iterates are asserted to be monotone.
    """
    check_profile(net, prof)
    return _kleene(net, prof, cfg or EngineConfig(method="kleene"), mode, exact)


def _kleene(net, prof, cfg, mode, exact=None):
    if exact is None:
        exact = not uses_proportional(prof)
    num = (lambda q: q) if exact else float
    tol = cfg.tolerance if exact else float(cfg.tolerance)
    slack = 0 if exact else 1e-12
    b = {v: num(net.b(v)) for v in net.nodes}
    if mode == "min":
        assets = dict(b)
    else:
        assets = {v: b[v] + num(net.total_claims(v)) for v in net.nodes}
    if mode == "min":
        f = {e.id: num(ZERO) for e in net.edges}
    else:
        f = payments(net, prof, assets)
    it = 0
    gap = None
    while it < cfg.max_iterations:
        it += 1
        assets = dict(b)
        for e in net.edges:
            assets[e.dst] += f[e.id]
        nf = payments(net, prof, assets)
        gap = 0
        for k in f:
            step = nf[k] - f[k]
            if (mode == "min" and step < -slack) or (mode == "max" and step > slack):
                raise AssertionError(f"Kleene iterate not monotone on edge {k}")
            gap = max(gap, abs(step))
        f = nf
        if gap == 0 or gap <= tol:
            break
    else:
        raise NonConvergence(
            f"no convergence after {cfg.max_iterations} iterations (step {gap})",
            iterations=it, residual=gap,
        )
    flow = FlowState(net, {k: _to_exact(x) for k, x in f.items()})
    return ClearingResult(flow, mode, "kleene", it, _to_exact(gap), assets=flow.utilities())


# -- brute-force oracle --------------------------------------------------------------------


def brute_force_fixed_points(net: Network, prof: StrategyProfile, grid=1, cap: int | None = None) -> set:
    """Every grid-quantised flow that is exactly a clearing state."""
    check_profile(net, prof)
    grid = to_q(grid)
    cap = enum_cap() if cap is None else cap
    ranges = []
    total = 1
    for e in net.edges:
        steps = int(e.weight // grid)
        vals = [grid * i for i in range(steps + 1)]
        if vals[-1] != e.weight and (e.weight / grid).denominator == 1:
            vals.append(e.weight)
        ranges.append(vals)
        total *= len(vals)
        if total > cap:
            raise EnumerationTooLarge(f"{total}+ grid flows exceed the cap {cap}")
    ids = [e.id for e in net.edges]
    found = set()
    for combo in itertools.product(*ranges):
        f = FlowState(net, dict(zip(ids, combo)))
        assets = {v: f.assets(v) for v in net.nodes}
        if payments(net, prof, assets) == f.flows:
            found.add(f)
    return found

