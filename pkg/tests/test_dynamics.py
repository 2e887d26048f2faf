"""Improvement dynamics, certificates and reduction consistency."""
from fractions import Fraction

import pytest

from clearnet.clearing import clearing
from clearnet.dynamics import (
    check_reduction_consistency,
    find_residual_cycle,
    freeze_strategy,
    improvement_step_max,
    improvement_step_min,
    raise_strategy,
    run_dynamics,
    trace_lines,
    verify_strong_equilibrium,
)
from clearnet.errors import FlowNotClearing, NonConvergence
from clearnet.gadgets import EXAMPLE1_PROFILES, example1_profile, gen_example1, gen_random
from clearnet.model import FlowState, Network
from clearnet.strategies import (
    PiecewiseLinear,
    Ranking,
    ThresholdStrategy,
    default_profile,
    evaluate_strategy,
    proportional_family,
    ranking_family,
)

F = Fraction


def test_residual_cycle_search_is_deterministic():
    net = gen_example1()
    flow = FlowState.of(net, {"v1->v4": 1})
    assert find_residual_cycle(net, flow) == ["v1->v2", "v2->v3", "v3->v1"]
    assert find_residual_cycle(net, FlowState.of(net, {"v1->v2": 1})) is None


def test_min_cycle_needs_a_bank_with_money():
    net = Network.build(["a", "b"], [("ab", "a", "b", 1), ("ba", "b", "a", 1)])
    flow = FlowState.zero(net)
    assert find_residual_cycle(net, flow) == ["ab", "ba"]
    assert find_residual_cycle(net, flow, require_positive_utility_node=True) is None


def test_example1_min_dynamics_single_step():
    net = gen_example1()
    prof = example1_profile(net, *EXAMPLE1_PROFILES["a"])
    run = run_dynamics(net, prof, "min")
    assert len(run.steps) == 1
    step = run.steps[0]
    assert step.coalition == ("v1", "v2", "v3")
    assert step.delta == 1
    assert step.utility_change() == {"v1": (1, 2), "v2": (0, 1), "v3": (0, 1)}
    assert run.certificate.recheck()
    lines = trace_lines(run.steps).splitlines()
    assert len(lines) == 1 and '"delta": "1"' in lines[0]


def test_example1_max_needs_no_step_for_profile_a():
    net = gen_example1()
    prof = example1_profile(net, *EXAMPLE1_PROFILES["a"])
    run = run_dynamics(net, prof, "max")
    assert run.steps == []
    assert verify_strong_equilibrium(net, prof, "max") is not None
    assert verify_strong_equilibrium(net, prof, "min") is None


def test_max_step_from_profile_c():
    net = gen_example1()
    prof = example1_profile(net, *EXAMPLE1_PROFILES["c"])
    flow = clearing(net, prof, "max").flow
    step = improvement_step_max(net, prof, flow)
    assert step is not None and step.violations() == []
    assert step.new_flow["v2->v3"] == 1


def test_step_rejects_foreign_flow():
    net = gen_example1()
    prof = example1_profile(net, *EXAMPLE1_PROFILES["a"])
    with pytest.raises(FlowNotClearing):
        improvement_step_min(net, prof, FlowState.zero(net))


@pytest.mark.parametrize("seed", range(12))
def test_max_dynamics_on_random_instances(seed):
    net, prof = gen_random(300 + seed, 7, 14)
    run = run_dynamics(net, prof, "max")
    assert len(run.steps) <= len(net.edges)
    for s in run.steps:
        assert s.violations() == []
    assert run.certificate.recheck()


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("rule", ["ranking", "proportional"])
def test_min_dynamics_keeps_off_cycle_flow(seed, rule):
    net, prof = gen_random(400 + seed, 7, 14, rule=rule)
    run = run_dynamics(net, prof, "min")
    tol = 0 if rule == "ranking" else F(1, 10**6)
    for s in run.steps:
        for e in net.edges:
            bump = s.delta if e.id in s.cycle else 0
            assert abs(s.new_flow[e.id] - s.old_flow[e.id] - bump) <= tol
    assert run.certificate.recheck()


def _two_cycle_net():
    return Network.build(
        ["a", "b", "c", "d", "x", "y"],
        [("ab", "a", "b", 1), ("ba", "b", "a", 1), ("ax", "a", "x", 1),
         ("cd", "c", "d", 1), ("dc", "d", "c", 1), ("cy", "c", "y", 1)],
        {"a": 1, "c": 1},
    )


def test_two_funded_cycles_take_two_steps():
    net = _two_cycle_net()
    prof = default_profile(net, {
        "a": ThresholdStrategy.ranking(net, "a", ["ax", "ab"]),
        "c": ThresholdStrategy.ranking(net, "c", ["cy", "cd"]),
    })
    assert len(run_dynamics(net, prof, "min").steps) == 2
    with pytest.raises(NonConvergence):
        run_dynamics(net, prof, "min", max_steps=1)


def test_freeze_reproduces_payments_up_to_current_cash():
    net = Network.build(["v", "a", "b"], [("va", "v", "a", 2), ("vb", "v", "b", 2)], {"v": 3})
    s = ThresholdStrategy.proportional(net, "v")
    flow = FlowState.of(net, {"va": F(3, 2), "vb": F(3, 2)})
    frozen = freeze_strategy(s, flow, proportional_family())
    for x in [F(j, 4) for j in range(0, 17)]:
        assert evaluate_strategy(frozen, x) == evaluate_strategy(s, x)


def test_raise_prepends_cycle_level():
    net = Network.build(["v", "a", "b"], [("va", "v", "a", 2), ("vb", "v", "b", 2)], {"v": 3})
    s = ThresholdStrategy.ranking(net, "v", ["vb", "va"])
    r = raise_strategy(s, "va", F(1))
    assert evaluate_strategy(r, F(1)) == {"va": 1, "vb": 0}
    assert evaluate_strategy(r, F(3)) == {"va": 1, "vb": 2}


def test_raise_replaces_tables_whose_claims_change():
    net = Network.build(["v", "a", "b"], [("va", "v", "a", 2), ("vb", "v", "b", 2)], {"v": 3})
    table = PiecewiseLinear({"va": ((0, 0), (2, 1), (4, 2)), "vb": ((0, 0), (2, 1), (4, 2))})
    s = ThresholdStrategy.levels(net, "v", [], [table])
    r = raise_strategy(s, "va", F(1))
    assert isinstance(r.rules[1], Ranking)
    assert evaluate_strategy(r, F(4)) == {"va": 2, "vb": 2}


@pytest.mark.parametrize("claims", [(2, 4), (1, 1, 1), (3, F(1, 2), 2)])
def test_ranking_and_proportional_are_reduction_consistent(claims):
    samples = [F(j, 3) for j in range(0, 3 * int(sum(map(F, claims))) + 1)]
    order = tuple(reversed(range(len(claims))))
    assert check_reduction_consistency(ranking_family(order), claims, samples).ok
    assert check_reduction_consistency(proportional_family(), claims, samples).ok


def test_reduction_check_finds_witness_for_bad_family():
    # the order flips with the parity of the total claim, so truncation changes it
    def parity_order(claims):
        return Ranking((0, 1) if sum(claims) % 2 == 0 else (1, 0))

    res = check_reduction_consistency(parity_order, (1, 3), [F(3, 2)])
    assert not res.ok and res.witness is not None
