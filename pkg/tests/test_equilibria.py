"""Welfare, profile realisation, finite strategy sets and equilibrium search."""
from fractions import Fraction

import pytest

from clearnet.clearing import max_clearing, min_clearing
from clearnet.dynamics import verify_strong_equilibrium
from clearnet.equilibria import (
    TOTAL_FLOW,
    UTILITARIAN,
    FiniteStrategySet,
    WelfareSpec,
    coin_ranking_sets,
    edge_ranking_sets,
    is_nash,
    is_strong,
    optimal_profile_search,
    realize_flow_as_profile,
    search_equilibrium,
    search_equilibrium_report,
    utility_table,
    welfare,
    z_optimal_flow,
)
from clearnet.errors import EnumerationTooLarge, InfeasibleTarget, InvalidProfile
from clearnet.gadgets import (
    EXAMPLE1_PROFILES,
    example1_profile,
    gen_example1,
    gen_no_social_opt,
    gen_random,
    no_social_opt_profile,
)
from clearnet.model import FlowState

F = Fraction


def test_welfare_kinds_on_example1():
    net = gen_example1()
    flow = max_clearing(net, example1_profile(net, "v2", "v3")).flow
    assert welfare(net, flow) == 5
    assert welfare(net, flow, TOTAL_FLOW) == 4
    assert welfare(net, flow, WelfareSpec("liquid_count")) == 4
    assert welfare(net, flow, WelfareSpec("nash")) == 0
    with pytest.raises(ValueError):
        WelfareSpec("bogus")


@pytest.mark.parametrize("eps, expected", [(F(1, 2), 6), (F(1, 4), F(13, 2)), (F(1, 8), F(27, 4)),
                                           (F(1, 16), F(55, 8)), (F(0), 4)])
def test_no_social_opt_welfare(eps, expected):
    # [PAPER] 1 + 2n - eps(n-1) for eps in (0, 1), dropping to 1 + n at eps = 0
    net = gen_no_social_opt(3)
    flow = min_clearing(net, no_social_opt_profile(net, eps)).flow
    assert welfare(net, flow) == expected


def test_realize_optimal_flow_on_example1():
    net = gen_example1()
    z = z_optimal_flow(net)
    prof = realize_flow_as_profile(net, z)
    assert max_clearing(net, prof).flow == z
    assert verify_strong_equilibrium(net, prof, "max") is not None


def test_realize_rejects_hoarding():
    net = gen_example1()
    with pytest.raises(InfeasibleTarget):
        realize_flow_as_profile(net, FlowState.zero(net))
    with pytest.raises(InfeasibleTarget):
        realize_flow_as_profile(net, FlowState.of(net, {"v1->v2": 1, "v1->v4": 1}))


def test_edge_ranking_sets_example1():
    net = gen_example1()
    sets = edge_ranking_sets(net)
    assert sets.strategic() == ["v1", "v2"]
    assert sets.size() == 4
    assert sets.violations(net) == []
    prof = example1_profile(net, "v2", "v3")
    assert sets.describe(sets.index_of(prof)) == {"v1": "v1->v2>v1->v4", "v2": "v2->v3>v2->v5"}


def test_index_of_foreign_strategy():
    net = gen_example1()
    sets = edge_ranking_sets(net)
    prof = realize_flow_as_profile(net, z_optimal_flow(net))
    with pytest.raises(InvalidProfile):
        sets.index_of(prof)


def test_coin_sets_deduplicate_capped_coins():
    net = gen_example1()
    sets = coin_ranking_sets(net, budget=2)
    # two unit edges: (a,a) caps to the same vector as (a) then nothing new
    assert len(sets.options["v1"]) == 4
    assert sets.violations(net) == []


def test_example1_nash_and_strong():
    net = gen_example1()
    sets = edge_ranking_sets(net)
    good = example1_profile(net, *EXAMPLE1_PROFILES["b"])
    c = example1_profile(net, *EXAMPLE1_PROFILES["c"])
    for mode in ("min", "max"):
        assert is_nash(net, good, sets, mode).ok
        assert is_strong(net, good, sets, mode).ok
        strong = is_strong(net, c, sets, mode)
        assert not strong.ok
    # [DERIVED] min: in c neither bank can start the cycle alone, but both can together
    assert is_nash(net, c, sets, "min").ok
    assert set(is_strong(net, c, sets, "min").witness.coalition) == {"v1", "v2"}
    # max: v2 alone closes the cycle, which then clears at full weight
    dev = is_nash(net, c, sets, "max").witness
    assert dev.coalition == ("v2",) and dev.after == {"v2": 1}
    assert search_equilibrium(net, sets, "min", "strong") is not None


def test_profile_a_min_single_bank_deviation():
    # [DERIVED] v1 switching to v2 first funds the cycle and gets 2
    net = gen_example1()
    sets = edge_ranking_sets(net)
    prof = example1_profile(net, *EXAMPLE1_PROFILES["a"])
    check = is_nash(net, prof, sets, "min")
    assert not check.ok
    assert check.witness.coalition == ("v1",) and check.witness.after == {"v1": 2}
    assert is_nash(net, prof, sets, "max").ok


def test_search_report_counts_and_witnesses():
    net = gen_example1()
    sets = edge_ranking_sets(net)
    rep = search_equilibrium_report(net, sets, "max", "nash")
    assert rep.profile is not None
    assert rep.profiles_checked == len(rep.witnesses) + 1


def test_utility_table_keys():
    net = gen_example1()
    table = utility_table(net, edge_ranking_sets(net), "min", ["v1", "v2"])
    assert table[("v1->v2>v1->v4", "v2->v3>v2->v5")] == (2, 1)
    assert len(table) == 4


def test_optimal_search_matches_lp_on_example1():
    net = gen_example1()
    prof, value = optimal_profile_search(net, edge_ranking_sets(net), "max", UTILITARIAN)
    assert value == welfare(net, z_optimal_flow(net), UTILITARIAN)


def test_enumeration_cap(monkeypatch):
    monkeypatch.setenv("CLEARNET_ENUM_CAP", "3")
    net = gen_example1()
    with pytest.raises(EnumerationTooLarge):
        search_equilibrium(net, edge_ranking_sets(net), "min")


def test_build_fills_fixed_defaults():
    net, _ = gen_random(1, 5, 8)
    sets = FiniteStrategySet.build(net, {})
    assert sets.size() == 1
    assert all(lab == ("fixed",) for lab in sets.labels.values())


def test_no_social_opt_all_into_cycle():
    # [DERIVED] w1 receives the unit from v and the returning unit from wn: 1 + n + 1
    net = gen_no_social_opt(3)
    flow = min_clearing(net, no_social_opt_profile(net, 1)).flow
    assert flow.assets("w1") == 2
    assert welfare(net, flow) == 5
