"""The welfare-optimal flow is a strong equilibrium of some profile.

Solve the flow LP exactly, turn the optimum into threshold strategies and
certify that no coalition can improve on it under maximal clearing.
"""
from clearnet import max_clearing, realize_flow_as_profile, verify_strong_equilibrium, welfare, z_optimal_flow
from clearnet.equilibria import TOTAL_FLOW
from clearnet.gadgets import gen_random

net, start = gen_random(seed=0, n_nodes=6, n_edges=10)
before = max_clearing(net, start).flow
z = z_optimal_flow(net, TOTAL_FLOW)
prof = realize_flow_as_profile(net, z)
after = max_clearing(net, prof).flow
print("random profile total flow:", welfare(net, before, TOTAL_FLOW))
print("LP optimum total flow:   ", welfare(net, z, TOTAL_FLOW))
print("realized profile reproduces it:", after == z)
print("strong-equilibrium certificate:", verify_strong_equilibrium(net, prof, "max") is not None)
