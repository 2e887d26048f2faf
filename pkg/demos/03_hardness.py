"""Optimal welfare encodes Hamiltonian paths and satisfying assignments."""
from clearnet import coin_ranking_sets, optimal_profile_search
from clearnet.gadgets import (
    gen_hampath_reduction,
    gen_sat_reduction,
    has_hamiltonian_path,
    is_satisfiable,
    sat_optimum,
    sat_strategy_sets,
)

nodes = list("abcd")
for arcs in ([("a", "b"), ("b", "c"), ("c", "d")], [("a", "b"), ("a", "c"), ("a", "d")]):
    net = gen_hampath_reduction(nodes, arcs)
    profile, value = optimal_profile_search(net, coin_ranking_sets(net, 1), "min")
    print(f"arcs {arcs}: best welfare {value}, threshold {2 * len(nodes) + 1},"
          f" Hamiltonian path: {has_hamiltonian_path(nodes, arcs)}")

for phi in ([(1, 2, 2), (-1, 2, 2)], [(1, 1, 1), (-1, -1, -1)]):
    net = gen_sat_reduction(phi)
    _, value = optimal_profile_search(net, sat_strategy_sets(net, phi), "max")
    print(f"formula {phi}: best welfare {value}, target {sat_optimum(phi)}, satisfiable: {is_satisfiable(phi)}")
